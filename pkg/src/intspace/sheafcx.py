"""Bounded complexes of cellular sheaves on (locally closed parts of) a face poset.

A cellular sheaf here is covariant: a face sigma <= tau gives a restriction
F(sigma) -> F(tau).  Stalks are stored per degree and cell; restrictions only
for covering pairs, composites are computed on demand.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import exactla as la
from .exactla import RatMatrix
from .stratspace import Selection, StratifiedPoset


class InvariantViolation(RuntimeError):
    """An internal consistency check failed."""


def _cells_of(P: StratifiedPoset, cells) -> tuple[int, ...]:
    if cells is None:
        return tuple(range(P.n))
    if isinstance(cells, Selection):
        return tuple(cells.members)
    return tuple(sorted(set(cells)))


class SheafComplex:
    """Bounded complex of cellular sheaves on a convex set of cells of ``poset``.

    dims[n][i]      stalk dimension of K^n at cell i (missing = 0)
    res[n][(i, j)]  restriction K^n(i) -> K^n(j) for a covering pair i < j
    d[n][i]         differential K^n(i) -> K^{n+1}(i)
    """

    def __init__(self, poset: StratifiedPoset, cells, dims, res=None, d=None, check: bool = True):
        self.poset = poset
        self.cells = _cells_of(poset, cells)
        self.cellset = frozenset(self.cells)
        self.dims: dict[int, dict[int, int]] = {}
        for n, m in dims.items():
            mm = {i: int(v) for i, v in m.items() if v and i in self.cellset}
            if mm:
                self.dims[int(n)] = mm
        self.res = {n: dict(v) for n, v in (res or {}).items() if n in self.dims}
        self.d = {n: dict(v) for n, v in (d or {}).items() if n in self.dims and n + 1 in self.dims}
        self._cache: dict = {}
        if check:
            self.validate()

    # -- accessors ------------------------------------------------------
    @property
    def degrees(self) -> list[int]:
        return sorted(self.dims)

    @property
    def lo(self) -> int:
        return min(self.dims) if self.dims else 0

    @property
    def hi(self) -> int:
        return max(self.dims) if self.dims else -1

    def dim(self, n: int, i: int) -> int:
        return self.dims.get(n, {}).get(i, 0)

    def covers(self, i: int):
        """Cofaces of i inside the domain."""
        return [j for j, _ in self.poset.cofaces[i] if j in self.cellset]

    def cover_pairs(self):
        for i in self.cells:
            for j in self.covers(i):
                yield i, j

    def diff(self, n: int, i: int) -> RatMatrix:
        m = self.d.get(n, {}).get(i)
        if m is None:
            return la.zeros(self.dim(n + 1, i), self.dim(n, i))
        return m

    def res_cover(self, n: int, i: int, j: int) -> RatMatrix:
        m = self.res.get(n, {}).get((i, j))
        if m is None:
            return la.zeros(self.dim(n, j), self.dim(n, i))
        return m

    def res_map(self, n: int, i: int, j: int) -> RatMatrix:
        """Restriction K^n(i) -> K^n(j) for i <= j."""
        if i == j:
            return la.identity(self.dim(n, i))
        key = (n, i, j)
        m = self._cache.get(key)
        if m is not None:
            return m
        P = self.poset
        if j in (c for c, _ in P.cofaces[i]):
            m = self.res_cover(n, i, j)
        else:
            if not P.leq(i, j):
                raise ValueError(f"{P.ids[i]} is not a face of {P.ids[j]}")
            mid = next(c for c, _ in P.cofaces[i] if c in self.cellset and P.leq(c, j))
            di, dj = self.dim(n, i), self.dim(n, j)
            if di == 0 or dj == 0:
                m = la.zeros(dj, di)
            else:
                m = self.res_map(n, mid, j) * self.res_cover(n, i, mid)
        self._cache[key] = m
        return m

    def stalk(self, i: int):
        """Stalk complex at i: (dims by degree, differentials by degree)."""
        return ({n: self.dim(n, i) for n in self.degrees}, {n: self.diff(n, i) for n in self.degrees})

    def total_dim(self, n: int) -> int:
        return sum(self.dims.get(n, {}).values())

    def is_zero(self) -> bool:
        return not self.dims

    def term(self, n: int) -> "CellSheaf":
        return CellSheaf(self.poset, self.cells, dict(self.dims.get(n, {})), dict(self.res.get(n, {})), check=False)

    # -- validation -----------------------------------------------------
    def validate(self):
        P = self.poset
        for n in self.degrees:
            for (i, j), m in self.res.get(n, {}).items():
                if (m.nrows(), m.ncols()) != (self.dim(n, j), self.dim(n, i)):
                    raise InvariantViolation(f"restriction shape at {P.ids[i]}<{P.ids[j]} deg {n}")
            for i, m in self.d.get(n, {}).items():
                if (m.nrows(), m.ncols()) != (self.dim(n + 1, i), self.dim(n, i)):
                    raise InvariantViolation(f"differential shape at {P.ids[i]} deg {n}")
            _check_functorial(self, n)
        for n in self.degrees:
            for i in self.cells:
                if self.dim(n, i) and self.dim(n + 2, i):
                    if not la.is_zero(self.diff(n + 1, i) * self.diff(n, i)):
                        raise InvariantViolation(f"d^2 != 0 at {P.ids[i]} deg {n}")
            for i, j in self.cover_pairs():
                if self.dim(n, i) and self.dim(n + 1, j):
                    a = self.diff(n, j) * self.res_cover(n, i, j)
                    b = self.res_cover(n + 1, i, j) * self.diff(n, i)
                    if not la.mat_equal(a, b):
                        raise InvariantViolation(f"differential not natural at {P.ids[i]}<{P.ids[j]} deg {n}")

    def __repr__(self):
        tot = {n: self.total_dim(n) for n in self.degrees}
        return f"SheafComplex({len(self.cells)} cells, total dims {tot})"

    # -- basic constructions --------------------------------------------
    def shift(self, s: int) -> "SheafComplex":
        """K[s]: (K[s])^n = K^{n+s}, differential multiplied by (-1)^s."""
        sg = -1 if s % 2 else 1
        dims = {n - s: v for n, v in self.dims.items()}
        res = {n - s: v for n, v in self.res.items()}
        d = {n - s: {i: (m if sg == 1 else la.scalar_mul(-1, m)) for i, m in v.items()} for n, v in self.d.items()}
        return SheafComplex(self.poset, self.cells, dims, res, d, check=False)

    def restrict(self, sel) -> "SheafComplex":
        cells = set(_cells_of(self.poset, sel))
        if not cells <= self.cellset:
            raise ValueError("selection not within the complex's base")
        dims = {n: {i: v for i, v in m.items() if i in cells} for n, m in self.dims.items()}
        res = {n: {k: m for k, m in v.items() if k[0] in cells and k[1] in cells} for n, v in self.res.items()}
        d = {n: {i: m for i, m in v.items() if i in cells} for n, v in self.d.items()}
        return SheafComplex(self.poset, cells, dims, res, d, check=False)


def _check_functorial(K, n):
    P = K.poset
    for i in K.cells:
        if not K.dim(n, i):
            continue
        acc: dict[int, RatMatrix] = {}
        for j in K.covers(i):
            r1 = K.res_cover(n, i, j)
            for k in K.covers(j):
                m = K.res_cover(n, j, k) * r1 if K.dim(n, j) else la.zeros(K.dim(n, k), K.dim(n, i))
                if k in acc:
                    if not la.mat_equal(acc[k], m):
                        raise InvariantViolation(f"restrictions not functorial at {P.ids[i]}<{P.ids[k]} deg {n}")
                else:
                    acc[k] = m


class CellSheaf:
    """A single cellular sheaf (complex concentrated in one degree)."""

    def __init__(self, poset, cells, stalk_dim: Mapping[int, int], restriction: Mapping, check: bool = True):
        self.poset = poset
        self.cells = _cells_of(poset, cells)
        self.stalk_dim = {i: v for i, v in stalk_dim.items() if v}
        self.restriction = dict(restriction)
        if check:
            self.as_complex(0)

    def as_complex(self, degree: int = 0) -> SheafComplex:
        return SheafComplex(self.poset, self.cells, {degree: self.stalk_dim}, {degree: self.restriction})

    def dim(self, i):
        return self.stalk_dim.get(i, 0)


@dataclass
class SheafMorphism:
    """Degreewise natural transformation; comps[n][i]: source^n(i) -> target^n(i)."""
    source: SheafComplex
    target: SheafComplex
    comps: dict = field(default_factory=dict)

    def comp(self, n: int, i: int) -> RatMatrix:
        m = self.comps.get(n, {}).get(i)
        if m is None:
            return la.zeros(self.target.dim(n, i), self.source.dim(n, i))
        return m

    def validate(self):
        A, B = self.source, self.target
        P = A.poset
        if A.cellset != B.cellset:
            raise InvariantViolation("morphism between complexes on different cells")
        for n in sorted(set(A.degrees) | set(B.degrees)):
            for i in A.cells:
                if not A.dim(n, i):
                    continue
                f = self.comp(n, i)
                if (f.nrows(), f.ncols()) != (B.dim(n, i), A.dim(n, i)):
                    raise InvariantViolation(f"component shape at {P.ids[i]} deg {n}")
                if B.dim(n + 1, i):
                    if not la.mat_equal(B.diff(n, i) * f, self.comp(n + 1, i) * A.diff(n, i)):
                        raise InvariantViolation(f"not a chain map at {P.ids[i]} deg {n}")
                for j in A.covers(i):
                    if B.dim(n, j):
                        if not la.mat_equal(B.res_cover(n, i, j) * f, self.comp(n, j) * A.res_cover(n, i, j)):
                            raise InvariantViolation(f"not natural at {P.ids[i]}<{P.ids[j]} deg {n}")
        return self

    def then(self, g: "SheafMorphism") -> "SheafMorphism":
        """g after self."""
        comps = {}
        for n in self.source.degrees:
            for i in self.source.cells:
                if self.source.dim(n, i) and g.target.dim(n, i):
                    comps.setdefault(n, {})[i] = g.comp(n, i) * self.comp(n, i)
        return SheafMorphism(self.source, g.target, comps)

    def scaled(self, c) -> "SheafMorphism":
        return SheafMorphism(self.source, self.target,
                             {n: {i: la.scalar_mul(c, m) for i, m in v.items()} for n, v in self.comps.items()})

    def plus(self, g: "SheafMorphism") -> "SheafMorphism":
        comps = {}
        for n in set(self.comps) | set(g.comps):
            for i in set(self.comps.get(n, {})) | set(g.comps.get(n, {})):
                comps.setdefault(n, {})[i] = self.comp(n, i) + g.comp(n, i)
        return SheafMorphism(self.source, self.target, comps)

    def restrict(self, sel) -> "SheafMorphism":
        A, B = self.source.restrict(sel), self.target.restrict(sel)
        comps = {n: {i: m for i, m in v.items() if i in A.cellset} for n, v in self.comps.items()}
        return SheafMorphism(A, B, comps)


def identity_morphism(K: SheafComplex) -> SheafMorphism:
    return SheafMorphism(K, K, {n: {i: la.identity(v) for i, v in m.items()} for n, m in K.dims.items()})


def zero_morphism(A: SheafComplex, B: SheafComplex) -> SheafMorphism:
    return SheafMorphism(A, B, {})


# -- constructions ------------------------------------------------------

def zero_complex(poset, cells=None) -> SheafComplex:
    return SheafComplex(poset, cells, {}, check=False)


def constant_sheaf(base, degree: int = 0, cells=None) -> SheafComplex:
    """Rank-one constant sheaf concentrated in ``degree``."""
    if isinstance(base, Selection):
        poset, cells = base.parent, base
    else:
        poset = base
    cs = _cells_of(poset, cells)
    cset = set(cs)
    one = la.identity(1)
    res = {(i, j): one for i in cs for j, _ in poset.cofaces[i] if j in cset}
    return SheafComplex(poset, cs, {degree: {i: 1 for i in cs}}, {degree: res}, check=False)


def skyscraper(poset, cell: int, degree: int = 0, cells=None) -> SheafComplex:
    """Rank one at ``cell``, zero elsewhere (a valid sheaf for any cell of a poset)."""
    return SheafComplex(poset, cells, {degree: {cell: 1}}, check=False)


def direct_sum(*Ks: SheafComplex) -> SheafComplex:
    K0 = Ks[0]
    degs = sorted(set().union(*[K.dims for K in Ks]))
    dims, res, d = {}, {}, {}
    for n in degs:
        dims[n] = {i: sum(K.dim(n, i) for K in Ks) for i in K0.cells}
        res[n] = {(i, j): la.block_diag([K.res_cover(n, i, j) for K in Ks]) for i, j in K0.cover_pairs()
                  if dims[n][i] and dims[n][j]}
        d[n] = {i: la.block_diag([K.diff(n, i) for K in Ks]) for i in K0.cells}
    return SheafComplex(K0.poset, K0.cells, dims, res, d, check=False)


def direct_sum_morphism(fs) -> SheafMorphism:
    A = direct_sum(*[f.source for f in fs])
    B = direct_sum(*[f.target for f in fs])
    comps = {}
    for n in A.degrees:
        for i in A.cells:
            comps.setdefault(n, {})[i] = la.block_diag([f.comp(n, i) for f in fs])
    return SheafMorphism(A, B, comps)


@dataclass
class Triangle:
    """A -> B -> C -> A[1] with C = cone(f)."""
    f: SheafMorphism
    cone: SheafComplex
    to_cone: SheafMorphism      # B -> C
    from_cone: SheafMorphism    # C -> A[1]


def cone(f: SheafMorphism, check: bool = True) -> Triangle:
    """Mapping cone: C^n = A^{n+1} + B^n, d(a, b) = (-d a, f a + d b)."""
    A, B = f.source, f.target
    if A.cellset != B.cellset:
        raise ValueError("source/target base mismatch")
    degs = sorted({n - 1 for n in A.degrees} | set(B.degrees))
    dims, res, d = {}, {}, {}
    for n in degs:
        dims[n] = {i: A.dim(n + 1, i) + B.dim(n, i) for i in A.cells}
        res[n] = {(i, j): la.block_diag([A.res_cover(n + 1, i, j), B.res_cover(n, i, j)])
                  for i, j in A.cover_pairs() if dims[n][i] and dims[n][j]}
    for n in degs:
        d[n] = {}
        for i in A.cells:
            a0, b0 = A.dim(n + 1, i), B.dim(n, i)
            a1, b1 = A.dim(n + 2, i), B.dim(n + 1, i)
            if (a0 + b0) == 0 or (a1 + b1) == 0:
                continue
            top = la.hstack([la.scalar_mul(-1, A.diff(n + 1, i)), la.zeros(a1, b0)])
            bot = la.hstack([f.comp(n + 1, i), B.diff(n, i)])
            d[n][i] = la.vstack([top, bot])
    C = SheafComplex(A.poset, A.cells, dims, res, d, check=check)
    to_c, from_c = {}, {}
    A1 = A.shift(1)
    for n in degs:
        for i in A.cells:
            a0, b0 = A.dim(n + 1, i), B.dim(n, i)
            if b0:
                to_c.setdefault(n, {})[i] = la.vstack([la.zeros(a0, b0), la.identity(b0)])
            if a0:
                from_c.setdefault(n, {})[i] = la.hstack([la.identity(a0), la.zeros(a0, b0)])
    return Triangle(f, C, SheafMorphism(B, C, to_c), SheafMorphism(C, A1, from_c))


def _kron(a: RatMatrix, b: RatMatrix) -> RatMatrix:
    ra, ca, rb, cb = a.nrows(), a.ncols(), b.nrows(), b.ncols()
    out = la.zeros(ra * rb, ca * cb)
    if not (ra and ca and rb and cb):
        return out
    A, Bm = a.tolist(), b.tolist()
    for i in range(ra):
        for j in range(ca):
            x = A[i][j]
            if x == 0:
                continue
            for k in range(rb):
                for l in range(cb):
                    y = Bm[k][l]
                    if y != 0:
                        out[i * rb + k, j * cb + l] = x * y
    return out


def tensor(K: SheafComplex, L: SheafComplex) -> SheafComplex:
    """Degreewise tensor product with Koszul sign d(x (x) y) = dx (x) y + (-1)^a x (x) dy."""
    if K.cellset != L.cellset:
        raise ValueError("base mismatch")
    pairs = {}
    for a in K.degrees:
        for b in L.degrees:
            pairs.setdefault(a + b, []).append((a, b))
    dims, res, d = {}, {}, {}
    for n, ab in pairs.items():
        dims[n] = {i: sum(K.dim(a, i) * L.dim(b, i) for a, b in ab) for i in K.cells}
        res[n] = {}
        for i, j in K.cover_pairs():
            if dims[n][i] and dims[n][j]:
                res[n][(i, j)] = la.block_diag([_kron(K.res_cover(a, i, j), L.res_cover(b, i, j)) for a, b in ab])
    for n, ab in pairs.items():
        if n + 1 not in pairs:
            continue
        tgt = pairs[n + 1]
        d[n] = {}
        for i in K.cells:
            rows_off, off = {}, 0
            for a, b in tgt:
                rows_off[(a, b)] = off
                off += K.dim(a, i) * L.dim(b, i)
            M = la.zeros(off, dims[n][i])
            if not off or not dims[n][i]:
                continue
            col = 0
            for a, b in ab:
                w = K.dim(a, i) * L.dim(b, i)
                if not w:
                    continue
                blocks = []
                if (a + 1, b) in rows_off and K.dim(a + 1, i):
                    blocks.append((rows_off[(a + 1, b)], _kron(K.diff(a, i), la.identity(L.dim(b, i)))))
                if (a, b + 1) in rows_off and L.dim(b + 1, i):
                    sg = -1 if a % 2 else 1
                    blocks.append((rows_off[(a, b + 1)], la.scalar_mul(sg, _kron(la.identity(K.dim(a, i)), L.diff(b, i)))))
                for r0, blk in blocks:
                    for r, row in enumerate(la.to_rows(blk)):
                        for c, e in enumerate(row):
                            if e != 0:
                                M[r0 + r, col + c] = e
                col += w
            d[n][i] = M
    return SheafComplex(K.poset, K.cells, dims, res, d)


def _stalk_cohomology(K: SheafComplex, n: int, i: int):
    """(reps, boundaries) for H^n of the stalk complex at i."""
    dn = K.dim(n, i)
    d_in = K.diff(n - 1, i) if K.dim(n - 1, i) else la.zeros(dn, 0)
    d_out = K.diff(n, i) if K.dim(n + 1, i) else la.zeros(0, dn)
    return la.cohomology_reps(d_in, d_out, dn), d_in


def cohomology_sheaf(K: SheafComplex, n: int) -> CellSheaf:
    """The sheaf i -> H^n(K(i)) with induced restriction maps."""
    data = {i: _stalk_cohomology(K, n, i) for i in K.cells}
    dims = {i: data[i][0].ncols() for i in K.cells}
    res = {}
    for i, j in K.cover_pairs():
        if dims[i] and dims[j]:
            v = K.res_cover(n, i, j) * data[i][0]
            res[(i, j)] = la.coords_modulo(data[j][0], data[j][1], v)
    return CellSheaf(K.poset, K.cells, dims, res, check=False)


def stalk_betti(K: SheafComplex, i: int) -> dict[int, int]:
    out = {}
    for n in K.degrees:
        dn = K.dim(n, i)
        if not dn:
            continue
        r_out = la.rank(K.diff(n, i)) if K.dim(n + 1, i) else 0
        r_in = la.rank(K.diff(n - 1, i)) if K.dim(n - 1, i) else 0
        h = dn - r_out - r_in
        if h:
            out[n] = h
    return out


def cohomology_sheaf_dims(K: SheafComplex) -> dict[int, dict[int, int]]:
    """{degree: {cell: dim H^degree(K(cell))}} with zero entries dropped."""
    out: dict[int, dict[int, int]] = {}
    for i in K.cells:
        for n, h in stalk_betti(K, i).items():
            out.setdefault(n, {})[i] = h
    return out


def induced_stalk_map(f: SheafMorphism, n: int, i: int) -> RatMatrix:
    """H^n(f) at cell i in the cohomology bases of source and target."""
    (zs, _), (zt, bt) = _stalk_cohomology(f.source, n, i), _stalk_cohomology(f.target, n, i)
    if not zs.ncols() or not zt.ncols():
        return la.zeros(zt.ncols(), zs.ncols())
    return la.coords_modulo(zt, bt, f.comp(n, i) * zs)


def is_quasi_isomorphism(f: SheafMorphism, cells=None) -> bool:
    cells = f.source.cells if cells is None else cells
    degs = sorted(set(f.source.degrees) | set(f.target.degrees))
    for i in cells:
        for n in degs:
            m = induced_stalk_map(f, n, i)
            if m.nrows() != m.ncols() or la.rank(m) != m.nrows():
                return False
    return True


class CellView:
    """Read-only view of a complex (sheaf or generator) on a subset of its cells."""

    def __init__(self, K, cells):
        self.base = K
        self.poset = K.poset
        self.cells = tuple(sorted(cells))
        self.cellset = frozenset(self.cells)
        if not self.cellset <= frozenset(K.cells):
            raise ValueError("view outside the domain")

    @property
    def degrees(self):
        return self.base.degrees

    def dim(self, n, i):
        return self.base.dim(n, i) if i in self.cellset else 0

    def covers(self, i):
        return [j for j, _ in self.poset.cofaces[i] if j in self.cellset]

    def cover_pairs(self):
        for i in self.cells:
            for j in self.covers(i):
                yield i, j

    def diff(self, n, i):
        return self.base.diff(n, i)

    def res_cover(self, n, i, j):
        return self.base.res_cover(n, i, j)

    def res_map(self, n, i, j):
        return self.base.res_map(n, i, j)

    def concrete(self, check: bool = False) -> SheafComplex:
        degs = self.degrees
        dims = {n: {i: self.dim(n, i) for i in self.cells if self.dim(n, i)} for n in degs}
        res = {n: {(i, j): self.res_cover(n, i, j) for i, j in self.cover_pairs() if self.dim(n, i) and self.dim(n, j)}
               for n in degs}
        d = {n: {i: self.diff(n, i) for i in self.cells if self.dim(n, i) and self.dim(n + 1, i)} for n in degs}
        return SheafComplex(self.poset, self.cells, dims, res, d, check=check)


def truncate(K: SheafComplex, n: int, side: str = "le"):
    """Smart truncation.

    side='le': returns (tau<=n K, inclusion tau<=n K -> K) with degree-n term ker d^n.
    side='gt': returns (tau>n K, projection K -> tau>n K) with degree-n term
    im d^n (identified with K^n / ker d^n).
    """
    P = K.poset
    if side not in ("le", "gt"):
        raise ValueError("side must be 'le' or 'gt'")
    basis = {}
    for i in K.cells:
        dn = K.dim(n, i)
        if not dn:
            continue
        if side == "le":
            basis[i] = la.kernel(K.diff(n, i)) if K.dim(n + 1, i) else la.identity(dn)
        else:
            if K.dim(n + 1, i):
                D = K.diff(n, i)
                _, piv = la.rref(D)
                # pivot columns of D span its image
                basis[i] = la.select_columns(D, piv)
            else:
                basis[i] = la.zeros(0, 0)
    if side == "le":
        dims = {m: dict(v) for m, v in K.dims.items() if m < n}
        dims[n] = {i: b.ncols() for i, b in basis.items()}
        res = {m: dict(v) for m, v in K.res.items() if m < n}
        res[n] = {}
        for i, j in K.cover_pairs():
            if dims[n].get(i) and dims[n].get(j):
                res[n][(i, j)] = la.solve(basis[j], K.res_cover(n, i, j) * basis[i])
        d = {m: dict(v) for m, v in K.d.items() if m < n - 1}
        if n - 1 in K.d:
            # image of d^{n-1} lies in ker d^n
            d[n - 1] = {i: la.solve(basis[i], m) for i, m in K.d[n - 1].items() if i in basis and basis[i].ncols()}
        T = SheafComplex(P, K.cells, dims, res, d, check=False)
        comps = {m: {i: la.identity(v) for i, v in T.dims[m].items()} for m in T.dims if m < n}
        comps[n] = {i: b for i, b in basis.items() if b.ncols()}
        return T, SheafMorphism(T, K, comps)
    dims = {m: dict(v) for m, v in K.dims.items() if m > n}
    dims[n] = {i: b.ncols() for i, b in basis.items()}
    res = {m: dict(v) for m, v in K.res.items() if m > n}
    res[n] = {}
    for i, j in K.cover_pairs():
        if dims[n].get(i) and dims[n].get(j):
            res[n][(i, j)] = la.solve(basis[j], K.res_cover(n + 1, i, j) * basis[i])
    d = {m: dict(v) for m, v in K.d.items() if m > n}
    d[n] = {i: b for i, b in basis.items() if b.ncols()}
    T = SheafComplex(P, K.cells, dims, res, d, check=False)
    comps = {m: {i: la.identity(v) for i, v in T.dims[m].items()} for m in T.dims if m > n}
    comps[n] = {i: la.solve(basis[i], K.diff(n, i)) for i, b in basis.items() if b.ncols()}
    return T, SheafMorphism(K, T, comps)


# -- hypercohomology ------------------------------------------------------

def _ranks_to_betti(dims: dict[int, int], ranks: dict[int, int]) -> dict[int, int]:
    out = {}
    for n, dn in dims.items():
        h = dn - ranks.get(n, 0) - ranks.get(n - 1, 0)
        if h < 0:
            raise InvariantViolation("negative cohomology dimension")
        if h:
            out[n] = h
    return out


def cellular_total(K: SheafComplex):
    """Cellular double complex on a closed set of cells.

    Returns (index, D) where index[n] lists (p, cell, local offset, size)
    blocks of total degree n and D[n] is the total differential
    delta + (-1)^p d from degree n to n+1.
    """
    P = K.poset
    for i in K.cells:
        if not P.below(i) <= K.cellset:
            raise ValueError("cellular model needs a down-closed set of cells")
    blocks: dict[int, list] = {}
    for q in K.degrees:
        for i in K.cells:
            k = K.dim(q, i)
            if k:
                blocks.setdefault(P.dims[i] + q, []).append((P.dims[i], i, q, k))
    offs = {}
    for n, bl in blocks.items():
        o = 0
        for (p, i, q, k) in sorted(bl):
            offs[(i, q)] = (n, o)
            o += k
        blocks[n] = sorted(bl)
    tot = {n: sum(b[3] for b in bl) for n, bl in blocks.items()}
    D = {}
    for n in blocks:
        if n + 1 not in blocks:
            continue
        M = la.zeros(tot[n + 1], tot[n])
        for (p, i, q, k) in blocks[n]:
            _, c0 = offs[(i, q)]
            # vertical
            if K.dim(q + 1, i):
                _, r0 = offs[(i, q + 1)]
                _blit(M, r0, c0, K.diff(q, i), -1 if p % 2 else 1)
            # horizontal
            for j, s in P.cofaces[i]:
                if j in K.cellset and K.dim(q, j):
                    _, r0 = offs[(j, q)]
                    _blit(M, r0, c0, K.res_cover(q, i, j), s)
        D[n] = M
    return blocks, D, tot


def _blit(M, r0, c0, blk, sign=1):
    for r, row in enumerate(la.to_rows(blk)):
        for c, e in enumerate(row):
            if e != 0:
                M[r0 + r, c0 + c] = M[r0 + r, c0 + c] + (e if sign == 1 else -e)


def hypercohomology_cellular(K: SheafComplex) -> dict[int, int]:
    _, D, tot = cellular_total(K)
    ranks = {n: la.rank(m) for n, m in D.items()}
    return _ranks_to_betti(tot, ranks)


def chains(P: StratifiedPoset, cells) -> list[list[tuple]]:
    """Strictly increasing chains in ``cells``, grouped by length - 1."""
    cs = sorted(cells)
    cset = set(cs)
    up = {i: sorted(j for j in P.above(i) if j in cset and j != i) for i in cs}
    out = [[(i,) for i in cs]]
    while out[-1]:
        nxt = [c + (j,) for c in out[-1] for j in up[c[-1]]]
        out.append(nxt)
    out.pop()
    return out


def chain_total(K: SheafComplex, cells=None):
    """Chain-of-cells model of RGamma over a convex set of cells (default: K's domain).

    C^{k,q} = product over chains s0<...<sk of K^q(sk), D = delta + (-1)^k d.
    Returns (blocks, D, tot) in the same layout as :func:`cellular_total`.
    """
    P = K.poset
    cells = K.cells if cells is None else cells
    ch = chains(P, cells)
    blocks: dict[int, list] = {}
    for k, L in enumerate(ch):
        for c in L:
            for q in K.degrees:
                m = K.dim(q, c[-1])
                if m:
                    blocks.setdefault(k + q, []).append((k, c, q, m))
    offs = {}
    tot = {}
    for n, bl in blocks.items():
        o = 0
        for (k, c, q, m) in bl:
            offs[(c, q)] = o
            o += m
        tot[n] = o
    D = {}
    for n in blocks:
        if n + 1 not in blocks:
            continue
        M = la.zeros(tot[n + 1], tot[n])
        for (k, c, q, m) in blocks[n]:
            c0 = offs[(c, q)]
            if K.dim(q + 1, c[-1]):
                _blit(M, offs[(c, q + 1)], c0, K.diff(q, c[-1]), -1 if k % 2 else 1)
        # (delta x)(c) = sum_{i<k1} (-1)^i x(c minus c_i) + (-1)^k1 res x(c minus last)
        for (k1, c1, q, m1) in blocks[n + 1]:
            if k1 == 0:
                continue
            r0 = offs[(c1, q)]
            for i in range(k1 + 1):
                face = c1[:i] + c1[i + 1:]
                if (face, q) not in offs:
                    continue
                sg = -1 if i % 2 else 1
                if i < k1:
                    _blit(M, r0, offs[(face, q)], la.identity(m1), sg)
                else:
                    _blit(M, r0, offs[(face, q)], K.res_map(q, face[-1], c1[-1]), sg)
        D[n] = M
    return blocks, D, tot


def hypercohomology_chain(K: SheafComplex, cells=None) -> dict[int, int]:
    _, D, tot = chain_total(K, cells)
    ranks = {n: la.rank(m) for n, m in D.items()}
    return _ranks_to_betti(tot, ranks)


def hypercohomology(K: SheafComplex, method: str = "auto") -> dict[int, int]:
    """Graded dimensions of H^n(RGamma(K)).

    method: 'chain' (chain-of-cells model, any convex domain), 'cellular'
    (down-closed domains only), 'injective' (minimal injective model, then
    global sections), or 'auto' (chain model for small inputs, otherwise the
    injective model).
    """
    if getattr(K, "kind", None) == "inj":
        return K.gamma_betti()
    if method == "chain":
        return hypercohomology_chain(K)
    if method == "cellular":
        return hypercohomology_cellular(K)
    if method == "injective":
        from .functors import injective_model
        return injective_model(K).model.gamma_betti()
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if len(K.cells) <= 40 and sum(K.total_dim(n) for n in K.degrees) <= 200:
        return hypercohomology_chain(K)
    from .functors import injective_model
    return injective_model(K).model.gamma_betti()


def euler_characteristic(betti: Mapping[int, int]) -> int:
    return sum((-1) ** n * v for n, v in betti.items())


# -- rank-one constancy ----------------------------------------------------

def _components(P, cells) -> list[set]:
    cset = set(cells)
    seen, comps = set(), []
    for s in sorted(cset):
        if s in seen:
            continue
        comp, stack = set(), [s]
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            for y, _ in P.cofaces[x] + P.faces[x]:
                if y in cset and y not in comp:
                    stack.append(y)
        seen |= comp
        comps.append(comp)
    return comps


def global_sections_dim(F: CellSheaf, cells=None) -> int:
    """dim of the inverse limit of F over the given cells."""
    K = F.as_complex(0)
    cells = K.cells if cells is None else sorted(cells)
    if not cells:
        return 0
    sub = K.restrict(cells)
    _, D, tot = chain_total(sub)
    if 0 not in tot:
        return 0
    r = la.rank(D[0]) if 0 in D else 0
    return tot[0] - r


def is_constant_rank_one(F: CellSheaf, within=None) -> bool:
    """True iff all stalks have rank one, restrictions are invertible and monodromy is trivial."""
    P = F.poset
    cells = sorted(_cells_of(P, within)) if within is not None else list(F.cells)
    if not cells:
        return False
    if any(F.dim(i) != 1 for i in cells):
        return False
    cset = set(cells)
    for (i, j), m in F.restriction.items():
        if i in cset and j in cset and m[0, 0] == 0:
            return False
    for i in cells:
        for j, _ in P.cofaces[i]:
            if j in cset and (i, j) not in F.restriction:
                return False
    # trivial monodromy: propagate a section along the cover graph
    val = {}
    for comp in _components(P, cells):
        s = min(comp)
        val[s] = la.fmpq(1)
        stack = [s]
        while stack:
            x = stack.pop()
            for y, _ in P.cofaces[x]:
                if y in comp:
                    v = F.restriction[(x, y)][0, 0] * val[x]
                    if y in val:
                        if val[y] != v:
                            return False
                    else:
                        val[y] = v
                        stack.append(y)
            for y, _ in P.faces[x]:
                if y in comp:
                    v = val[x] / F.restriction[(y, x)][0, 0]
                    if y in val:
                        if val[y] != v:
                            return False
                    else:
                        val[y] = v
                        stack.append(y)
    return True


def degree_warning(K: SheafComplex, top: int):
    if K.dims and (K.lo < 0 or K.hi > top):
        warnings.warn(f"complex has terms outside degrees 0..{top}", stacklevel=2)
