import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_sheaf_complex
from intspace import exactla as la
from intspace.models_io import (FIXTURES, SHEAF_FIXTURES, BundleModelSpec, NotACocycle, attach_stratum_model,
                                cp2_9, generator_cocycle, hopf_model, load_json, save_json, sheaf_from_json,
                                sheaf_to_json, space_from_json, space_to_json, sphere_bundle_pushforward,
                                split_model)
from intspace.sheafcx import (cohomology_sheaf_dims, constant_sheaf, hypercohomology, is_constant_rank_one,
                              cohomology_sheaf)
from intspace.stratspace import InvalidSpace


def test_data_files():
    P = cp2_9()
    assert P.f_vector() == [9, 36, 84, 90, 36]
    assert P.euler_characteristic() == 3


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixture_spaces_validate(name):
    FIXTURES[name]().validate()


def test_hopf_model(s2):
    H = hopf_model(s2)
    assert hypercohomology(H) == {0: 1, 3: 1}
    dims = cohomology_sheaf_dims(H)
    assert set(dims) == {0, 1}
    assert all(is_constant_rank_one(cohomology_sheaf(H, n)) for n in (0, 1))


def test_zero_cocycle_is_split(s2):
    H = sphere_bundle_pushforward(BundleModelSpec(s2, 1, {}))
    S = split_model(s2, [0, 1])
    assert cohomology_sheaf_dims(H) == cohomology_sheaf_dims(S)
    assert hypercohomology(H) == hypercohomology(S) == {0: 1, 1: 1, 2: 1, 3: 1}


def test_cocycle_validation(s2):
    with pytest.raises(NotACocycle):
        BundleModelSpec(s2, 1, {"0,1": 1}).validate()
    with pytest.raises(NotACocycle):
        BundleModelSpec(s2, 1, {"nope": 1}).validate()
    with pytest.raises(ValueError):
        BundleModelSpec(s2, 0, {}).validate()
    assert BundleModelSpec(s2, 1, generator_cocycle(s2, 2)).validate()


def test_cocycle_rejected_on_cp2():
    P = cp2_9()
    with pytest.raises(NotACocycle):
        BundleModelSpec(P, 1, generator_cocycle(P, 2)).validate()


def test_torus_bundle_sheaves():
    K = SHEAF_FIXTURES["torus_bundle"]()
    dims = cohomology_sheaf_dims(K)
    assert {n: set(v.values()) for n, v in dims.items()} == {0: {1}, 1: {2}, 2: {1}}


def test_space_roundtrip(tmp_path, cone_t2):
    path = tmp_path / "x.json"
    save_json(space_to_json(cone_t2), path)
    Q = space_from_json(load_json(path))
    assert Q.ids == cone_t2.ids and Q.dims == cone_t2.dims and Q.sign == cone_t2.sign
    assert Q.strata == cone_t2.strata and Q.stratum_of == cone_t2.stratum_of


def _same_sheaf(A, B):
    assert A.cells == B.cells and A.dims == B.dims
    for n in A.degrees:
        for i, j in A.cover_pairs():
            if A.dim(n, i) and A.dim(n, j):
                assert la.mat_equal(A.res_cover(n, i, j), B.res_cover(n, i, j))
        for i in A.cells:
            if A.dim(n, i) and A.dim(n + 1, i):
                assert la.mat_equal(A.diff(n, i), B.diff(n, i))


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6))
def test_sheaf_roundtrip(seed):
    from intspace.models_io import sphere_2
    K = random_sheaf_complex(sphere_2(), random.Random(seed))
    text = json.dumps(sheaf_to_json(K), sort_keys=True)
    L = sheaf_from_json(json.loads(text))
    _same_sheaf(K, L)
    assert json.dumps(sheaf_to_json(L), sort_keys=True) == text


def test_sheaf_base_by_path(tmp_path, s2):
    save_json(space_to_json(s2), tmp_path / "s2.json")
    obj = sheaf_to_json(hopf_model(s2), base_ref="s2.json")
    K = sheaf_from_json(obj, base_dir=tmp_path)
    _same_sheaf(hopf_model(s2), K)


def test_sheaf_rejects_non_covering(s2):
    obj = sheaf_to_json(constant_sheaf(s2))
    obj["terms"][0]["restrictions"].append(["0", "0,1,2", [["1"]]])
    with pytest.raises(InvalidSpace):
        sheaf_from_json(obj)


def test_malformed_space():
    with pytest.raises(InvalidSpace):
        space_from_json({"cells": [{"dim": 0}]})


def test_attach_constant_model_clear(s2):
    from intspace.istower import build_is, standard_perversity
    X = attach_stratum_model(s2, constant_sheaf(s2), codim=3)
    assert X.dim == 5
    T = build_is(X, standard_perversity("lower-middle", 5))
    assert T.steps[0].splitting.split and T.complex is None


def test_attach_matches_honest_pushforward(cone_t2):
    from intspace.functors import derived_pushforward_open
    from intspace.istower import build_is, standard_perversity
    X = cone_t2
    apex = X.index["apex"]
    U = X.open_complement(3).members
    R = derived_pushforward_open(constant_sheaf(X, 0, U), range(X.n)).complex
    M = attach_stratum_model(X, R.restrict([apex]))
    for name in ("zero", "total"):
        p = standard_perversity(name, 3)
        a = build_is(M, p).steps[0].splitting
        b = build_is(X, p).steps[0].splitting
        assert (a.split, a.ext1_dim, a.linear_part_dim) == (b.split, b.ext1_dim, b.linear_part_dim)
