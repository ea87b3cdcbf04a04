import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_sheaf_complex
from intspace.models_io import SHEAF_FIXTURES, hopf_model, sphere_2, torus_bundle_pushforward, generator_cocycle
from intspace.obstruction import (ascii_page, check_convergence, check_dd_zero, check_page_succession,
                                  obstruction_scan, spectral_sequence)
from intspace.sheafcx import constant_sheaf, hypercohomology


def rows(pg, qs, ps=(0, 1, 2)):
    return {q: tuple(pg.entries.get((p, q), 0) for p in ps) for q in qs}


def test_constant_single_row(s2):
    ss = spectral_sequence(constant_sheaf(s2))
    E2 = ss.page(2)
    assert rows(E2, (0, 1)) == {0: (1, 0, 1), 1: (0, 0, 0)}
    assert all(E2.rank(p, q) == 0 for (p, q) in E2.differentials)


def test_hopf_page():
    ss = spectral_sequence(hopf_model())
    E2 = ss.page(2)
    assert rows(E2, (0, 1)) == {0: (1, 0, 1), 1: (1, 0, 1)}
    assert E2.rank(0, 1) == 1
    assert ss.hyper == {0: 1, 3: 1}


def test_hopf_scan():
    rep = obstruction_scan(hopf_model(), 0)
    assert rep.verdict == "OBSTRUCTED"
    assert [(r, p, q) for r, p, q, _ in rep.witnesses] == [(2, 0, 1)]


def test_split_scan(s2):
    assert obstruction_scan(hopf_model(cocycle={}), 0).verdict == "CLEAR"
    ss = spectral_sequence(hopf_model(cocycle={}))
    assert ss.hyper == {0: 1, 1: 1, 2: 1, 3: 1}


def test_torus_bundle():
    K = SHEAF_FIXTURES["torus_bundle"]()
    ss = spectral_sequence(K)
    E2 = ss.page(2)
    assert rows(E2, (0, 1, 2)) == {0: (1, 0, 1), 1: (2, 0, 2), 2: (1, 0, 1)}
    assert E2.rank(0, 1) and E2.rank(0, 2)
    for qbar in (0, 1):
        assert obstruction_scan(K, qbar, ss).verdict == "OBSTRUCTED"


def test_torus_bundle_mixed_kunneth():
    # Kunneth: with Euler classes (e, 0) the generators a, b of H^1 satisfy
    # d2 a = e, d2 b = 0, hence d2(ab) = e.b != 0.  Both window maps are nonzero.
    K = SHEAF_FIXTURES["torus_bundle_mixed"]()
    E2 = spectral_sequence(K).page(2)
    assert E2.rank(0, 1) == 1
    assert E2.rank(0, 2) == 1


def test_torus_bundle_trivial_clear(s2):
    K = torus_bundle_pushforward(s2, {}, {})
    ss = spectral_sequence(K)
    assert all(pg.rank(p, q) == 0 for pg in ss.pages for (p, q) in pg.differentials)
    assert obstruction_scan(K, 0, ss).verdict == "CLEAR"
    assert obstruction_scan(K, 1, ss).verdict == "CLEAR"


def test_scan_rejects_negative_qbar():
    with pytest.raises(ValueError):
        obstruction_scan(hopf_model(), -1)


def test_ascii_page():
    txt = ascii_page(spectral_sequence(hopf_model()).page(2))
    assert txt.splitlines()[0] == "E_2"
    assert "q= 1 |" in txt


@pytest.mark.parametrize("name", ["hopf", "split_s2", "torus_bundle", "torus_bundle_mixed", "constant_s2",
                                  "constant_torus"])
def test_convergence_fixtures(name):
    K = SHEAF_FIXTURES[name]()
    ss = spectral_sequence(K)
    assert ss.pages[-1].r >= ss.spread + 1
    assert check_convergence(ss)
    assert ss.hyper == hypercohomology(K)
    assert check_dd_zero(ss.pages)
    assert check_page_succession(ss.pages)


@settings(max_examples=8)
@given(st.integers(0, 10 ** 6))
def test_transfer_matches_raw_filtration(seed):
    K = random_sheaf_complex(sphere_2(), random.Random(seed))
    a = spectral_sequence(K)
    b = spectral_sequence(K, reduce=False)
    assert [pg.to_json()["entries"] for pg in a.pages] == [pg.to_json()["entries"] for pg in b.pages]
    assert a.hyper == b.hyper == hypercohomology(K, "chain")
    assert check_convergence(a) and check_dd_zero(a.pages) and check_dd_zero(b.pages)


def test_chain_and_cellular_models_agree():
    K = hopf_model()
    a = spectral_sequence(K, model="cellular")
    b = spectral_sequence(K, model="chain")
    assert a.hyper == b.hyper
    assert a.page(2).rank(0, 1) == 1
