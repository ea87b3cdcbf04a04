import itertools

import pytest
from hypothesis import given, settings, strategies as st

from intspace.bettidual import (MinimumUnstable, _StepAlgebra, duality_check, exhaustive_minimum, generic_betti,
                                hyper_betti, sample_coords)
from intspace.istower import build_is, standard_perversity
from intspace.models_io import s1_times_suspended_torus, sphere_2, torus_7
from intspace.stratspace import cone_space, cycle_space, product_space, suspension_space


@pytest.fixture(scope="module")
def s1_sigma_t2():
    X = s1_times_suspended_torus()
    return X, build_is(X, standard_perversity("lower-middle", 4))


def test_smooth_profile(s2):
    prof = hyper_betti(build_is(s2, standard_perversity("zero", 2)))
    assert prof.vector(2) == (1, 0, 1)


def test_cone_torus_profiles(cone_t2):
    a = hyper_betti(build_is(cone_t2, standard_perversity("zero", 3)))
    b = hyper_betti(build_is(cone_t2, standard_perversity("total", 3)))
    assert a.vector(3) == (0, 0, 1, 0)
    assert b.vector(3) == (0, 2, 1, 0)
    # alpha is an isomorphism in degrees <= qbar
    assert a.alpha_ranks == {0: 1, 1: 2}
    assert b.alpha_ranks == {0: 1}


def test_unique_retraction_generic(cone_t2):
    g = generic_betti(cone_t2, standard_perversity("zero", 3), samples=5)
    assert g.profile.dims == {2: 1} and g.profile.sample_id.get("unique")


def test_duality_smooth(s2):
    assert duality_check(s2, standard_perversity("zero", 2)).verdict == "PASS"


def test_duality_suspended_torus():
    X = suspension_space(torus_7())
    assert duality_check(X, standard_perversity("lower-middle", 3)).verdict == "PASS"
    ctrl = duality_check(X, standard_perversity("lower-middle", 3), q=standard_perversity("lower-middle", 3))
    assert ctrl.verdict == "FAIL" and ctrl.mismatches


def test_sampling_deterministic():
    assert sample_coords(3, 4, 7) == sample_coords(3, 4, 7)
    assert all(-10 <= c <= 10 for t in sample_coords(5, 20, 1) for c in t)


def test_minimum_unstable_raised(s1_sigma_t2):
    X, T = s1_sigma_t2
    with pytest.raises(MinimumUnstable):
        generic_betti(X, T.perversity, samples=1, tower=T)


def test_depth_one_decomposition(s1_sigma_t2):
    X, T = s1_sigma_t2
    (step,) = [s for s in T.steps if s.splitting is not None]
    alg = _StepAlgebra(step)
    for c in sample_coords(step.splitting.linear_part_dim, 3, 11):
        dims, _ = alg.profile(c)
        T2 = build_is(X, T.perversity, choices={step.codim: c})
        assert hyper_betti(T2).dims == dims


@settings(max_examples=5)
@given(st.integers(0, 1000))
def test_minimum_monotone_in_samples(s1_sigma_t2, seed):
    X, T = s1_sigma_t2
    (step,) = [s for s in T.steps if s.splitting is not None]
    alg = _StepAlgebra(step)
    coords = sample_coords(step.splitting.linear_part_dim, 12, seed)
    coords[0] = (0,) * len(coords[0])
    profs = [alg.profile(c)[0] for c in coords]
    prev = None
    for k in range(1, len(profs) + 1):
        cur = {n: min(p.get(n, 0) for p in profs[:k]) for n in range(5)}
        if prev is not None:
            assert all(cur[n] <= prev[n] for n in cur)
        prev = cur


def test_generic_minimum_is_max_rank(s1_sigma_t2):
    X, T = s1_sigma_t2
    g = generic_betti(X, T.perversity, samples=20, tower=T)
    top = max(sum(r[2].values()) for r in g.samples)
    for c, dims, ranks in g.samples:
        assert (dims == g.profile.dims) == (sum(ranks.values()) == top)
    grid = exhaustive_minimum(X, T.perversity, tower=T)
    assert grid == g.profile.dims
