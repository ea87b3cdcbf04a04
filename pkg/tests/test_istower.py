import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_graph_model
from intspace.functors import derived_pushforward_open
from intspace.istower import (ObstructionNonzero, Perversity, build_ic, build_is, check_axioms, complement,
                              parse_perversity, splitting_data, standard_perversity)
from intspace.models_io import (attach_stratum_model, cone_over_torus, hopf_model, split_model, sphere_2, torus_7)
from intspace.sheafcx import constant_sheaf, euler_characteristic, hypercohomology
from intspace.stratspace import cone_space, cycle_space, point_space, product_space


def test_standard_perversities():
    assert [standard_perversity("lower-middle", 6)(k) for k in range(2, 7)] == [0, 0, 1, 1, 2]
    assert set(standard_perversity("zero", 5).values.values()) == {0}
    assert standard_perversity("total", 4)(2) == 0
    with pytest.raises(ValueError):
        standard_perversity("middle-ish", 4)


def test_complement():
    for d in range(2, 8):
        z, t = standard_perversity("zero", d), standard_perversity("total", d)
        lm, um = standard_perversity("lower-middle", d), standard_perversity("upper-middle", d)
        assert complement(z) == t and complement(lm) == um
        assert complement(complement(lm)) == lm


perversities = st.integers(2, 8).flatmap(
    lambda d: st.lists(st.integers(0, 1), min_size=d - 2, max_size=d - 2))


@given(perversities)
def test_complement_involution(steps):
    vals = {2: 0}
    for k, s in enumerate(steps, start=3):
        vals[k] = vals[k - 1] + s
    p = Perversity(vals)
    assert complement(complement(p)) == p
    Perversity(complement(p).values)


def test_invalid_perversities():
    with pytest.raises(ValueError):
        Perversity({2: 1})
    with pytest.raises(ValueError):
        Perversity({2: 0, 3: 2})
    assert parse_perversity("2:0,3:1", 3)(3) == 1


# -- splitting data --------------------------------------------------------

def test_splitting_trivial_truncation(s2):
    sd = splitting_data(constant_sheaf(s2), 0)
    assert sd.split and sd.linear_part_dim == 0
    assert sd.is_retraction(sd.retraction(()))


def test_splitting_hopf():
    sd = splitting_data(hopf_model(), 0)
    assert not sd.split and sd.ext1_dim == 1
    assert not any(sd.conditions.values())


def test_splitting_circle_linear_part():
    C = cycle_space(3)
    sd = splitting_data(split_model(C, [0, 1]), 0)
    assert sd.split and sd.linear_part_dim == 1
    assert sd.hom_CA_dim == hypercohomology(constant_sheaf(C)).get(1, 0)
    for c in (-2, 0, 5):
        assert sd.is_retraction(sd.retraction((c,)))


# -- axioms -------------------------------------------------------------------

def test_axioms_smooth(s2):
    for name in ("zero", "total", "lower-middle"):
        p = standard_perversity(name, 2)
        assert check_axioms(constant_sheaf(s2), s2, p, "IS").passed
        assert check_axioms(constant_sheaf(s2), s2, p, "IC").passed


def test_axioms_reject_untruncated_pushforward(cone_t2):
    X = cone_t2
    U = X.open_complement(3).members
    K = derived_pushforward_open(constant_sheaf(X, 0, U), range(X.n)).complex
    rep = check_axioms(K, X, standard_perversity("zero", 3), "IS")
    assert not rep.passed
    assert any(a == "c" and n == 0 and not ok for a, _, n, ok, _ in rep.results)


def test_axioms_need_full_domain(cone_t2):
    K = constant_sheaf(cone_t2, 0, cone_t2.open_complement(3).members)
    with pytest.raises(ValueError):
        check_axioms(K, cone_t2, standard_perversity("zero", 3))


# -- IC ----------------------------------------------------------------------

def cone_formula(link_betti, pbar_top):
    """Intersection cohomology of a cone on a manifold: truncated link cohomology."""
    return {n: v for n, v in link_betti.items() if n <= pbar_top and v}


def test_ic_smooth(torus):
    assert build_ic(torus, standard_perversity("zero", 2)).gamma_betti() == {0: 1, 1: 2, 2: 1}


def test_ic_cone_formula(cone_t2):
    link = hypercohomology(constant_sheaf(torus_7()))
    for name in ("zero", "total", "lower-middle", "upper-middle"):
        p = standard_perversity(name, 3)
        I = build_ic(cone_t2, p)
        assert I.gamma_betti() == cone_formula(link, p(3))
        assert check_axioms(I, cone_t2, p, "IC").passed


def test_ic_uniqueness_regression():
    X = cone_space(sphere_2())
    p = standard_perversity("zero", 3)
    a, b = build_ic(X, p), build_ic(X, p)
    assert a.gamma_betti() == b.gamma_betti() == {0: 1}


# -- IS ----------------------------------------------------------------------

def les_oracle(link_betti, qbar):
    """H(IS) from IS -> i_*Q_U -> tau<=qbar B with the second map iso in degrees <= qbar."""
    return {n: v for n, v in link_betti.items() if n > qbar and v}


def test_is_cone_torus(cone_t2):
    link = hypercohomology(constant_sheaf(torus_7()))
    for name in ("zero", "total", "lower-middle", "upper-middle"):
        p = standard_perversity(name, 3)
        T = build_is(cone_t2, p)
        q = complement(p)(3)
        assert T.betti() == les_oracle(link, q)
        assert check_axioms(T.complex, cone_t2, p, "IS").passed
    assert build_is(cone_t2, standard_perversity("zero", 3)).betti() == {2: 1}
    assert build_is(cone_t2, standard_perversity("total", 3)).betti() == {1: 2, 2: 1}


def test_is_smooth(s2):
    T = build_is(s2, standard_perversity("zero", 2))
    assert T.steps == [] and T.betti() == {0: 1, 2: 1}


def test_is_euler_characteristic(cone_t2):
    for name in ("zero", "total"):
        T = build_is(cone_t2, standard_perversity(name, 3))
        for s in T.steps:
            assert euler_characteristic(s.complex.gamma_betti()) == \
                euler_characteristic(s.J.gamma_betti()) - euler_characteristic(s.T.gamma_betti())


def test_is_hopf_obstructed_every_perversity(s2):
    X = attach_stratum_model(s2, hopf_model(s2), codim=2)
    for name in ("zero", "total", "lower-middle", "upper-middle"):
        with pytest.raises(ObstructionNonzero) as e:
            build_is(X, standard_perversity(name, X.dim))
        assert e.value.codim == 2


def test_is_explicit_coordinates():
    X = product_space(cycle_space(3), cone_space(cycle_space(3)))
    p = standard_perversity("zero", X.dim)
    T = build_is(X, p)
    (s,) = T.steps
    assert s.splitting.linear_part_dim == 1
    T2 = build_is(X, p, choices={2: (3,)})
    assert tuple(T2.steps[0].coords) == (3,)
    assert check_axioms(T2.complex, X, p, "IS").passed


def test_attach_stratum_model_checks(s2, cone_t2):
    from intspace.stratspace import InvalidSpace
    with pytest.raises(InvalidSpace):
        attach_stratum_model(s2, hopf_model(s2), codim=1)
    with pytest.raises(InvalidSpace):
        attach_stratum_model(cone_t2, constant_sheaf(cone_t2))
    apex = cone_t2.index["apex"]
    X = attach_stratum_model(cone_t2, constant_sheaf(cone_t2, 0, [apex]))
    assert X.codim == 3


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6))
def test_graph_strata_have_no_ext1(seed):
    B = random_graph_model(random.Random(seed))
    for q in range(0, 4):
        sd = splitting_data(B, q)
        assert sd.ext1_dim == 0 and sd.split
