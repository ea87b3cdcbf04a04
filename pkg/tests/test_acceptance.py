"""Acceptance criteria 1-11, one PASS/FAIL line each."""
import itertools
import json
import random
import time
from contextlib import contextmanager

import pytest

from conftest import ACCEPTANCE
from helpers import random_graph_model, random_lemma_fixture, random_split_degrees
from intspace.bettidual import duality_check, exhaustive_minimum, generic_betti
from intspace.cli import cli_dispatch
from intspace.istower import (ObstructionNonzero, Perversity, build_ic, build_is, check_axioms, complement,
                              splitting_data, standard_perversity)
from intspace.models_io import (SHEAF_FIXTURES, attach_stratum_model, cone_over_torus, cp2_model,
                                generator_cocycle, hopf_model, s1_times_suspended_torus, split_model, sphere_2,
                                torus_7, torus_bundle_pushforward)
from intspace.obstruction import check_convergence, check_dd_zero, obstruction_scan, spectral_sequence
from intspace.sheafcx import constant_sheaf, hypercohomology
from intspace.stratspace import (cone_space, cycle_space, from_simplicial, point_space, product_space,
                                 suspension_space)

NAMES = ("zero", "total", "lower-middle", "upper-middle")


@contextmanager
def criterion(n, title, budget=None):
    t0 = time.perf_counter()
    line = f"criterion {n:>2} FAIL  {title}"
    ACCEPTANCE[n] = line
    try:
        yield
        dt = time.perf_counter() - t0
        if budget is not None:
            assert dt < budget, f"took {dt:.1f}s, budget {budget}s"
        line = f"criterion {n:>2} PASS  {title} ({dt:.1f}s)"
    finally:
        ACCEPTANCE[n] = line
        print(line)


def all_perversities(d):
    for steps in itertools.product((0, 1), repeat=max(d - 2, 0)):
        vals = {2: 0}
        for k, s in enumerate(steps, start=3):
            vals[k] = vals[k - 1] + s
        yield Perversity(vals)


def rows(pg, qs, ps=(0, 1, 2)):
    return {q: tuple(pg.entries.get((p, q), 0) for p in ps) for q in qs}


def test_criterion_01_hopf():
    with criterion(1, "Hopf counterexample", budget=5):
        S = sphere_2()
        H = hopf_model(S)
        ss = spectral_sequence(H)
        E2 = ss.page(2)
        assert rows(E2, (0, 1)) == {0: (1, 0, 1), 1: (1, 0, 1)}
        assert E2.nonzero(0, 1)
        rep = obstruction_scan(H, 0, ss)
        assert rep.verdict == "OBSTRUCTED"
        assert (2, 0, 1) in [w[:3] for w in rep.witnesses]
        X = attach_stratum_model(S, H, codim=2)
        for p in all_perversities(X.dim):
            with pytest.raises(ObstructionNonzero):
                build_is(X, p)


def test_criterion_02_torus_bundle():
    with criterion(2, "torus-bundle counterexample", budget=10):
        S = sphere_2()
        gen = generator_cocycle(S, 2)
        K = torus_bundle_pushforward(S, gen, gen)
        ss = spectral_sequence(K)
        E2 = ss.page(2)
        assert rows(E2, (0, 1, 2)) == {0: (1, 0, 1), 1: (2, 0, 2), 2: (1, 0, 1)}
        assert E2.nonzero(0, 1) and E2.nonzero(0, 2)
        for qbar in (0, 1):
            assert obstruction_scan(K, qbar, ss).verdict == "OBSTRUCTED"
        X = attach_stratum_model(S, K, codim=3)
        for p in all_perversities(X.dim):
            assert complement(p)(3) in (0, 1)
            with pytest.raises(ObstructionNonzero) as e:
                build_is(X, p)
            assert e.value.codim == 3


def test_criterion_03_cp2():
    with criterion(3, "Euler-class model over CP^2, codim 6, qbar=2", budget=60):
        K = cp2_model()
        ss = spectral_sequence(K)
        qbar = complement(standard_perversity("lower-middle", 6))(6)
        assert qbar == 2
        rep = obstruction_scan(K, qbar, ss)
        assert rep.verdict == "OBSTRUCTED"
        assert any(r >= 2 and p == 0 and q == 3 for r, p, q, _ in rep.witnesses)
        assert ss.page(4).nonzero(0, 3)


def cone_formula(link, top):
    return {n: v for n, v in link.items() if n <= top and v}


def test_criterion_04_ic_cone():
    with criterion(4, "IC on cone(T^2) vs cone formula", budget=10):
        X = cone_over_torus()
        link = hypercohomology(constant_sheaf(torus_7()), "chain")
        for name in ("zero", "total"):
            p = standard_perversity(name, 3)
            got = build_ic(X, p).gamma_betti()
            assert got == cone_formula(link, p(3)), (name, got)


def test_criterion_05_is_cone():
    with criterion(5, "IS on cone(T^2) vs triangle long exact sequence", budget=10):
        X = cone_over_torus()
        link = hypercohomology(constant_sheaf(torus_7()), "chain")
        for name in NAMES:
            p = standard_perversity(name, 3)
            q = complement(p)(3)
            T = build_is(X, p)
            expect = {n: v for n, v in link.items() if n > q and v}
            assert T.betti() == expect
        assert build_is(X, standard_perversity("zero", 3)).betti() == {2: 1}


def _split_fixture(rng):
    kind = rng.choice(["s2", "circle", "torus", "point", "graph", "cone"])
    if kind == "cone":
        L = rng.choice([cycle_space(3), sphere_2(), cycle_space(4)])
        return cone_space(L)
    base = {"s2": sphere_2, "circle": cycle_space, "torus": torus_7, "point": point_space,
            "graph": lambda: from_simplicial([(0, 1), (1, 2), (1, 3)])}[kind]()
    M = split_model(base, random_split_degrees(rng))
    return attach_stratum_model(base, M, codim=rng.randint(2, 4))


def test_criterion_06_triviality():
    with criterion(6, "50 split pushforward fixtures never obstructed"):
        rng = random.Random(2024)
        failures = []
        for i in range(50):
            X = _split_fixture(rng)
            for p in all_perversities(X.dim):
                try:
                    build_is(X, p)
                except ObstructionNonzero as e:
                    failures.append((i, p.values, e.codim))
        assert not failures, failures


def test_criterion_07_graph_strata():
    with criterion(7, "graph strata: Ext^1 = 0; point strata: unique retraction"):
        failures = []
        rng = random.Random(7)
        for i in range(20):
            B = random_graph_model(rng)
            for q in range(4):
                sd = splitting_data(B, q, conditions=False)
                if sd.ext1_dim != 0:
                    failures.append(("graph model", i, q, sd.ext1_dim))
        graph_spaces = [product_space(cycle_space(3), cone_space(cycle_space(3))),
                        product_space(cycle_space(3), cone_space(sphere_2())),
                        s1_times_suspended_torus()]
        point_spaces = [cone_space(cycle_space(3)), cone_space(sphere_2()), cone_over_torus(),
                        suspension_space(torus_7())]
        for X in graph_spaces + point_spaces:
            for name in NAMES:
                T = build_is(X, standard_perversity(name, X.dim))
                for s in T.steps:
                    if s.splitting.ext1_dim != 0:
                        failures.append(("ext1", X.n, name, s.codim))
                    if X in point_spaces and s.splitting.linear_part_dim != 0:
                        failures.append(("linear part", X.n, name, s.codim))
        for d in ([0, 1], [0, 2, 3], [1, 1, 2]):
            pt = point_space()
            M = attach_stratum_model(pt, split_model(pt, d), codim=3)
            for p in all_perversities(M.dim):
                sd = build_is(M, p).steps[0].splitting
                if sd.ext1_dim or sd.linear_part_dim:
                    failures.append(("point model", d, p.values))
        assert not failures, failures


def test_criterion_08_lemma_equivalence():
    with criterion(8, "four split-lemma conditions agree on 30 random complexes"):
        rng = random.Random(8)
        failures, split_count = [], 0
        for i in range(30):
            B, q = random_lemma_fixture(rng)
            sd = splitting_data(B, q)
            vals = set(sd.conditions.values()) | {sd.split}
            split_count += sd.split
            if len(vals) != 1:
                failures.append((i, q, sd.split, sd.conditions))
        assert not failures, failures
        assert 0 < split_count < 30


def test_criterion_09_convergence():
    with criterion(9, "spectral sequence convergence and d o d = 0"):
        fixtures = dict((n, f) for n, f in SHEAF_FIXTURES.items())
        fixtures["cp2_with_sphere"] = lambda: cp2_model(with_sphere=True)
        fixtures["constant_cone_t2"] = lambda: constant_sheaf(cone_over_torus())
        failures = []
        for name, make in sorted(fixtures.items()):
            K = make()
            ss = spectral_sequence(K)
            if ss.pages[-1].r < ss.spread + 1 or not check_convergence(ss):
                failures.append((name, "convergence"))
            if not check_dd_zero(ss.pages):
                failures.append((name, "d o d"))
        assert not failures, failures


def test_criterion_10_generic_duality():
    with criterion(10, "generic duality on S^1 x Sigma T^2", budget=300):
        X = s1_times_suspended_torus()
        p, q = standard_perversity("lower-middle", 4), standard_perversity("upper-middle", 4)
        assert complement(p) == q
        rep = duality_check(X, p, samples=20, seed=0)
        assert rep.verdict == "PASS", rep.to_json()
        assert all(rep.dims_p.get(i, 0) == rep.dims_q.get(4 - i, 0) for i in range(5))
        for pv in (p, q):
            T = build_is(X, pv)
            g = generic_betti(X, pv, samples=20, seed=0, tower=T)
            assert exhaustive_minimum(X, pv, tower=T) == g.profile.dims


def test_criterion_11_determinism(tmp_path):
    with criterion(11, "byte-identical JSON reports for fixed seeds"):
        for name in ("s2", "cone_t2", "s1_sigma_t2", "hopf", "constant_s2", "torus_bundle"):
            assert cli_dispatch(["fixture", name, "--out", str(tmp_path / f"{name}.json")]) == 0
        f = lambda n: str(tmp_path / f"{n}.json")
        commands = [
            ["check", "--space", f("s2"), "--sheaf", f("constant_s2")],
            ["ic", "--space", f("cone_t2"), "--perversity", "total"],
            ["is", "--space", f("cone_t2"), "--perversity", "zero"],
            ["is", "--space", f("s1_sigma_t2"), "--perversity", "lower-middle", "--seed", "3"],
            ["is", "--space", f("s2"), "--sheaf", f("torus_bundle"), "--codim", "3"],
            ["obstruct", "--space", f("s2"), "--sheaf", f("hopf"), "--qbar", "0"],
            ["ss", "--sheaf", f("torus_bundle")],
            ["betti", "--space", f("s1_sigma_t2"), "--perversity", "upper-middle", "--seed", "5"],
            ["duality", "--space", f("s1_sigma_t2"), "--perversity", "lower-middle", "--seed", "1"],
        ]
        for i, cmd in enumerate(commands):
            outs = []
            for run in range(2):
                path = tmp_path / f"r{i}_{run}.json"
                code = cli_dispatch(cmd + ["--out", str(path), "--no-figures"])
                assert code in (0, 2), (cmd, code)
                outs.append(path.read_bytes())
            assert outs[0] == outs[1], cmd
            json.loads(outs[0])
