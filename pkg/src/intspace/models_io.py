"""Fixture spaces, synthetic pushforward models and JSON input/output."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from . import exactla as la
from .functors import cellular_resolution, hom_from_projective
from .sheafcx import InvariantViolation, SheafComplex, constant_sheaf, cone, direct_sum, tensor
from .stratspace import (TOP, InvalidSpace, StratifiedPoset, boundary_simplex, cone_space, cycle_space,
                         from_simplicial, product_space, suspension_space)


class NotACocycle(ValueError):
    pass


# -- data files ------------------------------------------------------------

def _facets(name: str):
    with resources.files("intspace.data").joinpath(name).open() as fh:
        return json.load(fh)["facets"]


def torus_7() -> StratifiedPoset:
    """The 7-vertex torus."""
    return from_simplicial(_facets("torus_7.json"))


def cp2_9() -> StratifiedPoset:
    """The 9-vertex complex projective plane."""
    return from_simplicial(_facets("cp2_9.json"))


def sphere_2() -> StratifiedPoset:
    return boundary_simplex(3)


def cone_over_torus() -> StratifiedPoset:
    return cone_space(torus_7(), 3)


def s1_times_suspended_torus() -> StratifiedPoset:
    """S^1 x Sigma T^2 with its two circle strata of codimension 3."""
    return product_space(cycle_space(3), suspension_space(torus_7()))


# -- bundle models ------------------------------------------------------------

@dataclass
class BundleModelSpec:
    base: StratifiedPoset
    fiber_sphere_dim: int
    euler_cocycle: Mapping[str, object]      # (n+1)-cell id -> rational

    def validate(self):
        n = self.fiber_sphere_dim
        if n < 1:
            raise ValueError("fiber sphere dimension must be positive")
        P = self.base
        vals = {}
        for cid, v in self.euler_cocycle.items():
            if cid not in P.index:
                raise NotACocycle(f"unknown cell {cid!r}")
            i = P.index[cid]
            if P.dims[i] != n + 1:
                raise NotACocycle(f"cell {cid!r} has dimension {P.dims[i]}, expected {n + 1}")
            vals[i] = la._q(v)
        for t in range(P.n):
            if P.dims[t] == n + 2:
                s = sum((sg * vals.get(f, 0) for f, sg in P.faces[t]), la.fmpq(0))
                if s != 0:
                    raise NotACocycle(f"coboundary nonzero on {P.ids[t]}")
        return vals


def generator_cocycle(base: StratifiedPoset, degree: int) -> dict:
    """Value 1 on the first cell of the given dimension (a generator of top cohomology)."""
    for i in range(base.n):
        if base.dims[i] == degree:
            return {base.ids[i]: 1}
    raise ValueError(f"no cell of dimension {degree}")


def euler_class_map(base: StratifiedPoset, n: int, cocycle: Mapping[str, object], cells=None):
    """Chain map P(Q)[-n-1] -> Q built from a cocycle on (n+1)-cells."""
    spec = BundleModelSpec(base, n, cocycle)
    vals = spec.validate()
    res = cellular_resolution(base, cells)
    Q = constant_sheaf(base, 0, res.model.cells)
    H = hom_from_projective(res.model, Q)
    gens = res.model.gens.get(-(n + 1), [])
    parts = {-(n + 1): {a: [vals.get(c, la.fmpq(0))] for a, c in enumerate(gens)}}
    v = H.vector_from(n + 1, parts)
    if not la.is_zero(H.d(n + 1) * v):
        raise NotACocycle("Euler map is not a chain map")
    return H.to_morphism(n + 1, v)


def sphere_bundle_pushforward(spec: BundleModelSpec) -> SheafComplex:
    """cone(e: P(Q)[-n-1] -> Q): cohomology sheaves Q in degrees 0 and n."""
    f = euler_class_map(spec.base, spec.fiber_sphere_dim, spec.euler_cocycle)
    return cone(f).cone


def hopf_model(base: StratifiedPoset | None = None, cocycle=None) -> SheafComplex:
    base = base or sphere_2()
    cocycle = generator_cocycle(base, 2) if cocycle is None else cocycle
    return sphere_bundle_pushforward(BundleModelSpec(base, 1, cocycle))


def torus_bundle_pushforward(base: StratifiedPoset, e1, e2) -> SheafComplex:
    """Tensor product of two circle-bundle models."""
    A = sphere_bundle_pushforward(BundleModelSpec(base, 1, e1))
    B = sphere_bundle_pushforward(BundleModelSpec(base, 1, e2))
    return tensor(A, B)


def cp2_model(with_sphere: bool = False) -> SheafComplex:
    """S^3-bundle model over the 9-vertex CP^2 with Euler class a generator of H^4.

    With ``with_sphere`` the result is tensored with the split S^2 model, giving
    nonzero rows in degrees 0, 2, 3 and 5.  No fiber row above degree 5 is
    produced; only d_4^{0,3} != 0 is the operative claim.
    """
    base = cp2_9()
    M = sphere_bundle_pushforward(BundleModelSpec(base, 3, generator_cocycle(base, 4)))
    if with_sphere:
        M = tensor(M, direct_sum(constant_sheaf(base), constant_sheaf(base, 2)))
    return M


def split_model(base: StratifiedPoset, degrees, cells=None) -> SheafComplex:
    """Direct sum of shifted constant sheaves (degrees may repeat)."""
    return direct_sum(*[constant_sheaf(base, q, cells) for q in degrees])


# -- stratum models -----------------------------------------------------------

@dataclass
class StratumModelSpace:
    """A two-strata space given only through its singular stratum.

    ``stratum`` is a face poset of the singular stratum, ``model`` the
    restriction j^* Ri_* Q_U to it, ``codim`` the codimension and ``dim`` the
    dimension of the (untriangulated) total space.
    """
    stratum: StratifiedPoset
    codim: int
    model: SheafComplex
    dim: int
    total: StratifiedPoset | None = None
    cells: tuple = field(default=())

    def singular_codims(self):
        return [self.codim]


def attach_stratum_model(X: StratifiedPoset, model: SheafComplex, codim: int | None = None) -> StratumModelSpace:
    """Pair a model on the singular stratum with the two-strata space it describes.

    If X has a singular stratum, the model must live on exactly its cells.
    Otherwise X is taken to be the stratum itself and ``codim`` is required.
    """
    sing = X.singular_codims()
    if sing:
        if len(sing) != 1:
            raise InvalidSpace("attach_stratum_model needs a two-strata space")
        k = sing[0]
        if codim is not None and codim != k:
            raise InvalidSpace(f"codimension {codim} does not match the stratum's {k}")
        cells = tuple(X.stratum_cells(k).members)
        if set(model.cells) != set(cells) or model.poset is not X:
            raise InvalidSpace("stratum mismatch: model does not live on the singular stratum")
        return StratumModelSpace(X, k, model, X.dim, X, cells)
    if codim is None or codim < 2:
        raise InvalidSpace("codimension >= 2 required for a bare stratum")
    if model.poset is not X or set(model.cells) != set(range(X.n)):
        raise InvalidSpace("stratum mismatch: model must live on all cells of the stratum")
    return StratumModelSpace(X, codim, model, X.dim + codim, None, tuple(range(X.n)))


# -- JSON ------------------------------------------------------------------

def space_to_json(P: StratifiedPoset) -> dict:
    return {
        "cells": [{"id": c, "dim": P.dims[i], "stratum": P.stratum_of[i]} for i, c in enumerate(P.ids)],
        "incidence": [[P.ids[a], P.ids[b], s] for (a, b), s in sorted(P.sign.items())],
        "strata": [{"name": k, "codim": v} for k, v in P.strata.items()],
    }


def space_from_json(obj) -> StratifiedPoset:
    try:
        cells = {c["id"]: int(c["dim"]) for c in obj["cells"]}
        if len(cells) != len(obj["cells"]):
            raise InvalidSpace("duplicate cell ids")
        assign = {c["id"]: c.get("stratum", TOP) for c in obj["cells"]}
        strata = {s["name"]: int(s["codim"]) for s in obj.get("strata", [{"name": TOP, "codim": 0}])}
        inc = [(a, b, int(s)) for a, b, s in obj.get("incidence", [])]
    except (KeyError, TypeError) as e:
        raise InvalidSpace(f"malformed space JSON: {e}") from None
    return StratifiedPoset(cells, inc, strata, assign)


def sheaf_to_json(K, base_ref=None) -> dict:
    P = K.poset
    out = {"base": base_ref if base_ref is not None else space_to_json(P)}
    if len(K.cells) != P.n:
        out["domain"] = [P.ids[i] for i in K.cells]
    terms, diffs = [], []
    for n in K.degrees:
        stalks = {P.ids[i]: K.dim(n, i) for i in K.cells if K.dim(n, i)}
        res = [[P.ids[i], P.ids[j], la.mat_to_json(K.res_cover(n, i, j))]
               for i, j in K.cover_pairs() if K.dim(n, i) and K.dim(n, j)]
        terms.append({"deg": n, "stalks": stalks, "restrictions": res})
        if n + 1 in K.degrees:
            maps = {P.ids[i]: la.mat_to_json(K.diff(n, i)) for i in K.cells if K.dim(n, i) and K.dim(n + 1, i)}
            if maps:
                diffs.append({"deg": n, "maps": maps})
    out["terms"] = terms
    out["differentials"] = diffs
    return out


def sheaf_from_json(obj, base: StratifiedPoset | None = None, base_dir: Path | None = None) -> SheafComplex:
    ref = obj.get("base")
    if base is None:
        if isinstance(ref, dict):
            base = space_from_json(ref)
        elif isinstance(ref, str):
            path = Path(ref) if base_dir is None else Path(base_dir) / ref
            base = space_from_json(json.loads(path.read_text()))
        else:
            raise InvalidSpace("sheaf JSON needs a base")
    P = base
    try:
        cells = [P.index[c] for c in obj["domain"]] if "domain" in obj else list(range(P.n))
        dims, res, d = {}, {}, {}
        for t in obj["terms"]:
            n = int(t["deg"])
            dims[n] = {P.index[c]: int(v) for c, v in t["stalks"].items()}
            res[n] = {}
            for a, b, m in t.get("restrictions", []):
                i, j = P.index[a], P.index[b]
                res[n][(i, j)] = la.mat_from_json(m, (dims[n].get(j, 0), dims[n].get(i, 0)))
        for t in obj.get("differentials", []):
            n = int(t["deg"])
            d[n] = {}
            for c, m in t["maps"].items():
                i = P.index[c]
                d[n][i] = la.mat_from_json(m, (dims.get(n + 1, {}).get(i, 0), dims.get(n, {}).get(i, 0)))
    except KeyError as e:
        raise InvalidSpace(f"malformed sheaf JSON: unknown key or cell {e}") from None
    for n, m in res.items():
        for (i, j) in m:
            if j not in (c for c, _ in P.cofaces[i]):
                raise InvalidSpace(f"restriction {P.ids[i]} -> {P.ids[j]} is not a covering pair")
    try:
        return SheafComplex(P, cells, dims, res, d, check=True)
    except InvariantViolation as e:
        raise InvalidSpace(f"invalid sheaf complex: {e}") from None


def save_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


FIXTURES = {
    "s2": sphere_2,
    "circle": lambda: cycle_space(3),
    "torus": torus_7,
    "cp2": cp2_9,
    "cone_circle": lambda: cone_space(cycle_space(3)),
    "cone_s2": lambda: cone_space(sphere_2()),
    "cone_t2": cone_over_torus,
    "s1_sigma_t2": s1_times_suspended_torus,
}


def _torus_bundle(mixed=False):
    base = sphere_2()
    gen = generator_cocycle(base, 2)
    return torus_bundle_pushforward(base, gen, {} if mixed else gen)


SHEAF_FIXTURES = {
    "hopf": hopf_model,
    "split_s2": lambda: hopf_model(cocycle={}),
    "torus_bundle": _torus_bundle,
    "torus_bundle_mixed": lambda: _torus_bundle(True),
    "cp2": cp2_model,
    "constant_s2": lambda: constant_sheaf(sphere_2()),
    "constant_torus": lambda: constant_sheaf(torus_7()),
}


def cli_dispatch(argv=None) -> int:
    from .cli import cli_dispatch as run
    return run(argv)
