"""Restriction, pushforwards, projective/injective models and derived Hom.

Two kinds of "generator complexes" carry most of the derived-category work:

* injective: a sum of sheaves I_s (rank one on cells <= s), so that
  Hom(F, I_s) = F(s)^* and global sections of I_s are one dimensional;
* projective: a sum of sheaves P_s (rank one on cells >= s), so that
  Hom(P_s, F) = F(s).

In both cases the differential is a coefficient matrix between generators;
a coefficient from generator h (at cell c_h) to g (at c_g) requires c_g <= c_h.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import exactla as la
from .exactla import RatMatrix
from .sheafcx import InvariantViolation, SheafComplex, SheafMorphism, _cells_of
from .stratspace import StratifiedPoset


class GeneratorComplex:
    """Complex of injective (kind='inj') or projective (kind='proj') representables.

    gens[n] lists the cells carrying the degree-n generators (sorted by
    cell).  D[n] is the (#gens[n+1] x #gens[n]) coefficient matrix.  The
    object answers the same stalk queries as :class:`SheafComplex`, computed
    lazily from the generator data.
    """

    def __init__(self, poset: StratifiedPoset, cells, kind: str, gens: Mapping[int, list], D: Mapping[int, RatMatrix] | None = None,
                 check: bool = True):
        if kind not in ("inj", "proj"):
            raise ValueError(kind)
        self.poset = poset
        self.kind = kind
        self.cells = _cells_of(poset, cells)
        self.cellset = frozenset(self.cells)
        self.gens = {n: list(v) for n, v in gens.items() if v}
        self.D: dict[int, RatMatrix] = {}
        for n in self.gens:
            if n + 1 in self.gens:
                m = (D or {}).get(n)
                self.D[n] = m if m is not None else la.zeros(len(self.gens[n + 1]), len(self.gens[n]))
        self._stalk_idx: dict = {}
        self._cache: dict = {}
        if check:
            self.validate()

    # -- bookkeeping ----------------------------------------------------
    @property
    def degrees(self) -> list[int]:
        return sorted(self.gens)

    @property
    def lo(self):
        return min(self.gens) if self.gens else 0

    @property
    def hi(self):
        return max(self.gens) if self.gens else -1

    def num_gens(self) -> int:
        return sum(len(v) for v in self.gens.values())

    def validate(self):
        P = self.poset
        for n, cs in self.gens.items():
            for c in cs:
                if c not in self.cellset:
                    raise InvariantViolation(f"generator at {P.ids[c]} outside the domain")
            if cs != sorted(cs):
                raise InvariantViolation("generators must be sorted by cell")
        for n, m in self.D.items():
            src, tgt = self.gens[n], self.gens[n + 1]
            if (m.nrows(), m.ncols()) != (len(tgt), len(src)):
                raise InvariantViolation("coefficient matrix shape")
            rows = la.to_rows(m)
            for a, row in enumerate(rows):
                for b, e in enumerate(row):
                    if e != 0 and not P.leq(tgt[a], src[b]):
                        raise InvariantViolation(f"coefficient {P.ids[src[b]]} -> {P.ids[tgt[a]]} not allowed")
            if n + 2 in self.gens and n + 1 in self.D:
                if not la.is_zero(self.D[n + 1] * m):
                    raise InvariantViolation(f"d^2 != 0 in degree {n}")

    def _visible(self, cell_of_gen: int, x: int) -> bool:
        """Does a generator at ``cell_of_gen`` contribute to the stalk at x?"""
        if self.kind == "inj":
            return self.poset.leq(x, cell_of_gen)
        return self.poset.leq(cell_of_gen, x)

    def stalk_index(self, n: int, x: int) -> list[int]:
        key = (n, x)
        v = self._stalk_idx.get(key)
        if v is None:
            P = self.poset
            near = P.above(x) if self.kind == "inj" else P.below(x)
            v = [a for a, c in enumerate(self.gens.get(n, ())) if c in near]
            self._stalk_idx[key] = v
        return v

    # -- SheafComplex-like interface -------------------------------------
    def dim(self, n: int, x: int) -> int:
        if x not in self.cellset:
            return 0
        return len(self.stalk_index(n, x))

    @property
    def dims(self):
        return {n: {x: self.dim(n, x) for x in self.cells if self.dim(n, x)} for n in self.degrees}

    def covers(self, i):
        return [j for j, _ in self.poset.cofaces[i] if j in self.cellset]

    def cover_pairs(self):
        for i in self.cells:
            for j in self.covers(i):
                yield i, j

    def diff(self, n: int, x: int) -> RatMatrix:
        if n not in self.D:
            return la.zeros(self.dim(n + 1, x), self.dim(n, x))
        return la.submatrix(self.D[n], self.stalk_index(n + 1, x), self.stalk_index(n, x))

    def res_cover(self, n: int, x: int, y: int) -> RatMatrix:
        return self.res_map(n, x, y)

    def res_map(self, n: int, x: int, y: int) -> RatMatrix:
        sx, sy = self.stalk_index(n, x), self.stalk_index(n, y)
        M = la.zeros(len(sy), len(sx))
        if self.kind == "inj":
            pos = {a: k for k, a in enumerate(sx)}
            for r, a in enumerate(sy):
                M[r, pos[a]] = 1
        else:
            pos = {a: k for k, a in enumerate(sy)}
            for c, a in enumerate(sx):
                M[pos[a], c] = 1
        return M

    def total_dim(self, n: int) -> int:
        return sum(self.dim(n, x) for x in self.cells)

    def is_zero(self):
        return not self.gens

    def to_complex(self, check: bool = False) -> SheafComplex:
        dims = {n: {x: self.dim(n, x) for x in self.cells} for n in self.degrees}
        res = {n: {(i, j): self.res_map(n, i, j) for i, j in self.cover_pairs() if self.dim(n, i) and self.dim(n, j)}
               for n in self.degrees}
        d = {n: {x: self.diff(n, x) for x in self.cells if self.dim(n, x) and self.dim(n + 1, x)} for n in self.degrees}
        return SheafComplex(self.poset, self.cells, dims, res, d, check=check)

    def restrict(self, sel) -> "GeneratorComplex":
        """Restriction to a convex subset.  For injectives the subset must be open
        (up-closed) in the domain; for projectives, closed (down-closed)."""
        cells = set(_cells_of(self.poset, sel))
        keep = {n: [a for a, c in enumerate(cs) if c in cells] for n, cs in self.gens.items()}
        gens = {n: [self.gens[n][a] for a in keep[n]] for n in self.gens}
        D = {n: la.submatrix(m, keep[n + 1], keep[n]) for n, m in self.D.items()}
        return GeneratorComplex(self.poset, cells, self.kind, gens, D, check=False)

    def on_domain(self, cells) -> "GeneratorComplex":
        """Same generators viewed on a larger domain (pushforward of injectives along an open inclusion)."""
        return GeneratorComplex(self.poset, cells, self.kind, self.gens, self.D, check=False)

    def shift(self, s: int) -> "GeneratorComplex":
        sg = -1 if s % 2 else 1
        gens = {n - s: v for n, v in self.gens.items()}
        D = {n - s: (m if sg == 1 else la.scalar_mul(-1, m)) for n, m in self.D.items()}
        return GeneratorComplex(self.poset, self.cells, self.kind, gens, D, check=False)

    # -- global sections (injective only) --------------------------------
    def gamma_complex(self) -> tuple[dict[int, int], dict[int, RatMatrix]]:
        if self.kind != "inj":
            raise ValueError("global sections are only free for injective models")
        return {n: len(v) for n, v in self.gens.items()}, dict(self.D)

    def gamma_betti(self) -> dict[int, int]:
        dims, D = self.gamma_complex()
        ranks = {n: la.rank(m) for n, m in D.items()}
        out = {}
        for n, k in dims.items():
            h = k - ranks.get(n, 0) - ranks.get(n - 1, 0)
            if h:
                out[n] = h
        return out

    def gamma_cohomology(self, n: int):
        """(cycle reps, boundary matrix) of H^n of the global-sections complex."""
        k = len(self.gens.get(n, ()))
        d_in = self.D.get(n - 1, la.zeros(k, 0))
        d_out = self.D.get(n, la.zeros(0, k))
        return la.cohomology_reps(d_in, d_out, k), d_in

    def __repr__(self):
        return f"GeneratorComplex({self.kind}, gens {{{', '.join(f'{n}: {len(v)}' for n, v in sorted(self.gens.items()))}}})"


def _sorted_gens(raw: Mapping[int, list]):
    """Sort generator lists by cell; return sorted lists and old->new index maps."""
    gens, perm = {}, {}
    for n, lst in raw.items():
        order = sorted(range(len(lst)), key=lambda a: (lst[a], a))
        gens[n] = [lst[a] for a in order]
        perm[n] = {old: new for new, old in enumerate(order)}
    return gens, perm


# -- minimal injective model ------------------------------------------------

@dataclass
class InjectiveModel:
    """Minimal injective model I of K with a quasi-isomorphism psi: K -> I.

    psi[n][g] is a row vector: the functional K^n(cell(g)) -> Q of the
    generator g (index into model.gens[n]).
    """
    source: object
    model: GeneratorComplex
    psi: dict

    def morphism(self) -> SheafMorphism:
        return functionals_to_morphism(self.source, self.model, self.psi)


def functionals_to_morphism(F, I: GeneratorComplex, funcs, shift: int = 0) -> SheafMorphism:
    """Chain map F -> I[shift] from per-generator functionals.

    funcs[n][g] is a row vector on F^{n - shift}(cell(g)) for generator g of I^n.
    """
    comps = {}
    for n, cs in I.gens.items():
        m = n - shift
        for x in I.cells:
            idx = I.stalk_index(n, x)
            fx = F.dim(m, x)
            if not idx or not fx:
                continue
            rows = []
            for a in idx:
                f = funcs.get(n, {}).get(a)
                if f is None:
                    rows.append(la.zeros(1, fx))
                else:
                    rows.append(f * F.res_map(m, x, cs[a]) if cs[a] != x else f)
            comps.setdefault(m, {})[x] = la.vstack(rows)
    return SheafMorphism(F, I.shift(shift) if shift else I, comps)


def injective_model(K, cells=None) -> InjectiveModel:
    """Minimal injective model, built top-down over the cells of K's domain."""
    P = K.poset
    dom = list(K.cells) if cells is None else sorted(cells)
    order = sorted(dom, key=lambda i: (P.dims[i], i), reverse=True)
    degs = K.degrees
    if not degs:
        return InjectiveModel(K, GeneratorComplex(P, dom, "inj", {}, {}, check=False), {})
    raw_cell: dict[int, list] = {}      # degree -> list of cells (creation order)
    coef: dict[int, list] = {}          # degree -> per generator: dict {source gen idx (deg-1): c}
    funcs: dict[int, list] = {}         # degree -> per generator: row vector on K^n(cell)
    at_cell: dict[int, list] = {}       # cell -> [(degree, idx)]
    for s in order:
        vis: dict[int, list] = {}
        for t in P.above(s):
            for n, a in at_cell.get(t, ()):
                vis.setdefault(n, []).append(a)
        for v in vis.values():
            v.sort()
        mlo = degs[0] - 2
        mhi = max([degs[-1] - 1] + list(vis))
        cdim = {m: K.dim(m + 1, s) + len(vis.get(m, ())) for m in range(mlo - 1, mhi + 2)}
        # differential of cone(psi_s): C^m = K^{m+1}(s) + I^m(s)
        dC = {}
        for m in range(mlo - 1, mhi + 1):
            k0, i0 = K.dim(m + 1, s), len(vis.get(m, ()))
            k1, i1 = K.dim(m + 2, s), len(vis.get(m + 1, ()))
            M = la.zeros(k1 + i1, k0 + i0)
            if k0 and k1:
                _put(M, 0, 0, K.diff(m + 1, s), -1)
            if k0 and i1:
                rows = []
                for a in vis[m + 1]:
                    c = raw_cell[m + 1][a]
                    f = funcs[m + 1][a]
                    rows.append(f * K.res_map(m + 1, s, c) if c != s else f)
                _put(M, k1, 0, la.vstack(rows))
            if i0 and i1:
                pos = {a: r for r, a in enumerate(vis[m])}
                for r, a in enumerate(vis[m + 1]):
                    for b, c in coef[m + 1][a].items():
                        if b in pos:
                            M[k1 + r, k0 + pos[b]] = c
            dC[m] = M
        new = []
        for m in range(mlo, mhi + 1):
            if not cdim.get(m):
                continue
            # dual cohomology: functionals l with l d^{m-1} = 0, modulo mu d^m
            reps = la.cohomology_reps(dC[m].transpose(), dC[m - 1].transpose(), cdim[m])
            if reps.ncols():
                new.append((m, reps))
        for m, reps in new:
            n = m + 1
            k0 = K.dim(n, s)
            for col in range(reps.ncols()):
                vec = [reps[r, col] for r in range(reps.nrows())]
                f = la.mat([vec[:k0]], k0) if k0 else la.zeros(1, 0)
                cf = {}
                for r, a in enumerate(vis.get(m, ())):
                    e = vec[k0 + r]
                    if e != 0:
                        cf[a] = e
                raw_cell.setdefault(n, []).append(s)
                coef.setdefault(n, []).append(cf)
                funcs.setdefault(n, []).append(f)
                at_cell.setdefault(s, []).append((n, len(raw_cell[n]) - 1))
    gens, perm = _sorted_gens(raw_cell)
    D = {}
    for n in gens:
        if n + 1 in gens:
            M = la.zeros(len(gens[n + 1]), len(gens[n]))
            for a, cf in enumerate(coef[n + 1]):
                for b, c in cf.items():
                    M[perm[n + 1][a], perm[n][b]] = c
            D[n] = M
    psi = {n: {perm[n][a]: f for a, f in enumerate(funcs[n])} for n in gens}
    model = GeneratorComplex(P, dom, "inj", gens, D, check=False)
    return InjectiveModel(K, model, psi)


def _put(M, r0, c0, blk, sign=1):
    for r, row in enumerate(la.to_rows(blk)):
        for c, e in enumerate(row):
            if e != 0:
                M[r0 + r, c0 + c] = e if sign == 1 else -e


# -- minimal projective model ------------------------------------------------

@dataclass
class ProjectiveModel:
    """Minimal projective model P with a quasi-isomorphism phi: P -> K.

    phi[n][g] is a column vector in K^n(cell(g)).
    """
    target: object
    model: GeneratorComplex
    phi: dict

    def morphism(self) -> SheafMorphism:
        return vectors_to_morphism(self.model, self.target, self.phi)


def vectors_to_morphism(Pm: GeneratorComplex, F, vecs, shift: int = 0) -> SheafMorphism:
    """Chain map P[-shift] -> F from per-generator vectors vecs[n][g] in F^{n+shift}(cell g)."""
    comps = {}
    for n, cs in Pm.gens.items():
        m = n + shift
        for x in Pm.cells:
            idx = Pm.stalk_index(n, x)
            fx = F.dim(m, x)
            if not idx or not fx:
                continue
            cols = []
            for a in idx:
                v = vecs.get(n, {}).get(a)
                if v is None:
                    cols.append(la.zeros(fx, 1))
                else:
                    cols.append(F.res_map(m, cs[a], x) * v if cs[a] != x else v)
            comps.setdefault(n + shift, {})[x] = la.hstack(cols)
    return SheafMorphism(Pm.shift(-shift) if shift else Pm, F, comps)


def projective_model(K, cells=None) -> ProjectiveModel:
    """Minimal projective model, built bottom-up over the cells of K's domain."""
    P = K.poset
    dom = list(K.cells) if cells is None else sorted(cells)
    order = sorted(dom, key=lambda i: (P.dims[i], i))
    degs = K.degrees
    if not degs:
        return ProjectiveModel(K, GeneratorComplex(P, dom, "proj", {}, {}, check=False), {})
    lo, hi = degs[0] - len(order) - 1, degs[-1]
    raw_cell: dict[int, list] = {}
    dvec: dict[int, list] = {}     # degree t -> per generator: dict {target gen idx (deg t+1): c}
    vecs: dict[int, list] = {}     # degree t -> per generator: vector in K^t(cell)
    for s in order:
        closure = P.below(s)
        present = [n for n in raw_cell if raw_cell[n]]
        mlo = min(present + [degs[0]]) - 1
        vis = {n: [a for a, c in enumerate(raw_cell.get(n, ())) if c in closure] for n in range(mlo, hi + 2)}
        # cone(phi_s): C^t = M^{t+1}(s) + K^t(s), d(m, k) = (-d m, phi m + d k)
        cdim = {t: len(vis.get(t + 1, ())) + K.dim(t, s) for t in range(mlo - 1, hi + 1)}
        dC = {}
        for t in range(mlo - 1, hi + 1):
            m0, k0 = len(vis.get(t + 1, ())), K.dim(t, s)
            m1, k1 = len(vis.get(t + 2, ())), K.dim(t + 1, s)
            M = la.zeros(m1 + k1, m0 + k0)
            if m0 and m1:
                pos = {a: r for r, a in enumerate(vis[t + 2])}
                for c, a in enumerate(vis[t + 1]):
                    for b, e in dvec[t + 1][a].items():
                        if b in pos:
                            M[pos[b], c] = -e
            if m0 and k1:
                cols = []
                for a in vis[t + 1]:
                    c = raw_cell[t + 1][a]
                    v = vecs[t + 1][a]
                    cols.append(K.res_map(t + 1, c, s) * v if c != s else v)
                _put(M, m1, 0, la.hstack(cols))
            if k0 and k1:
                _put(M, m1, m0, K.diff(t, s))
            dC[t] = M
        new = []
        for t in range(mlo, hi + 1):
            if not cdim.get(t):
                continue
            d_in = dC.get(t - 1, la.zeros(cdim[t], cdim.get(t - 1, 0)))
            d_out = dC.get(t, la.zeros(cdim.get(t + 1, 0), cdim[t]))
            reps = la.cohomology_reps(d_in, d_out, cdim[t])
            if reps.ncols():
                new.append((t, reps))
        for t, reps in new:
            m0 = len(vis.get(t + 1, ()))
            k0 = K.dim(t, s)
            for col in range(reps.ncols()):
                vec = [reps[r, col] for r in range(reps.nrows())]
                dv = {}
                for r, a in enumerate(vis.get(t + 1, ())):
                    if vec[r] != 0:
                        dv[a] = vec[r]
                v = la.mat([[-x] for x in vec[m0:]]) if k0 else la.zeros(0, 1)
                raw_cell.setdefault(t, []).append(s)
                dvec.setdefault(t, []).append(dv)
                vecs.setdefault(t, []).append(v)
    gens, perm = _sorted_gens(raw_cell)
    D = {}
    for t in gens:
        if t + 1 in gens:
            M = la.zeros(len(gens[t + 1]), len(gens[t]))
            for a, dv in enumerate(dvec[t]):
                for b, e in dv.items():
                    M[perm[t + 1][b], perm[t][a]] = e
            D[t] = M
    phi = {t: {perm[t][a]: v for a, v in enumerate(vecs[t])} for t in gens}
    model = GeneratorComplex(P, dom, "proj", gens, D, check=False)
    return ProjectiveModel(K, model, phi)


def cellular_resolution(P: StratifiedPoset, cells=None) -> ProjectiveModel:
    """Cellular projective resolution of the constant sheaf on a closed set of cells.

    One generator P_s in degree -dim(s) per cell, d(g_t) = sum [t:s] g_s.
    The augmentation sends vertex generators to 1.
    """
    from .sheafcx import constant_sheaf
    cs = _cells_of(P, cells)
    cset = set(cs)
    for i in cs:
        if not P.below(i) <= cset:
            raise ValueError("cellular resolution needs a closed set of cells")
    raw = {}
    for i in cs:
        raw.setdefault(-P.dims[i], []).append(i)
    gens = {n: sorted(v) for n, v in raw.items()}
    pos = {n: {c: a for a, c in enumerate(v)} for n, v in gens.items()}
    D = {}
    for n in gens:
        if n + 1 in gens:
            M = la.zeros(len(gens[n + 1]), len(gens[n]))
            for a, t in enumerate(gens[n]):
                for s, sg in P.faces[t]:
                    M[pos[n + 1][s], a] = sg
            D[n] = M
    model = GeneratorComplex(P, cs, "proj", gens, D, check=False)
    Q = constant_sheaf(P, 0, cs)
    phi = {0: {a: la.identity(1) for a in range(len(gens.get(0, ())))}}
    return ProjectiveModel(Q, model, phi)


# -- Hom complexes ---------------------------------------------------------

class HomComplex:
    """Total Hom complex with explicit coordinates.

    ``blocks[m]`` lists (generator degree, generator index, size) in
    coordinate order; D[m]: Hom^m -> Hom^{m+1}.
    """

    def __init__(self, kind, src, tgt, blocks, D):
        self.kind, self.src, self.tgt = kind, src, tgt
        self.blocks = blocks
        self.D = D
        self.offsets = {}
        for m, bl in blocks.items():
            o = 0
            for (n, a, k) in bl:
                self.offsets[(m, n, a)] = o
                o += k
        self.dims = {m: sum(b[2] for b in bl) for m, bl in blocks.items()}

    def dim(self, m):
        return self.dims.get(m, 0)

    def d(self, m) -> RatMatrix:
        return self.D.get(m, la.zeros(self.dim(m + 1), self.dim(m)))

    def betti(self, lo=None, hi=None) -> dict[int, int]:
        out = {}
        for m in sorted(self.dims):
            if lo is not None and m < lo or hi is not None and m > hi:
                continue
            h = self.dim(m) - la.rank(self.d(m)) - la.rank(self.d(m - 1))
            if h:
                out[m] = h
        return out

    def cohomology(self, m):
        """(cycle reps, boundaries) of H^m."""
        return la.cohomology_reps(self.d(m - 1), self.d(m), self.dim(m)), self.d(m - 1)

    def cocycles(self, m) -> RatMatrix:
        return la.kernel(self.d(m)) if self.dim(m + 1) else la.identity(self.dim(m))

    def is_coboundary(self, m, vec: RatMatrix) -> bool:
        if la.is_zero(vec):
            return True
        if not self.dim(m - 1):
            return False
        return la.solve(self.d(m - 1), vec) is not None

    def split(self, m, vec: RatMatrix) -> dict:
        """Coordinates of a vector of Hom^m, grouped per generator."""
        out = {}
        for (n, a, k) in self.blocks.get(m, ()):
            o = self.offsets[(m, n, a)]
            out.setdefault(n, {})[a] = [vec[o + r, 0] for r in range(k)]
        return out

    def to_morphism(self, m, vec: RatMatrix) -> SheafMorphism:
        parts = self.split(m, vec)
        if self.kind == "into_inj":
            funcs = {n: {a: la.mat([v], len(v)) if v else la.zeros(1, 0) for a, v in d.items()} for n, d in parts.items()}
            return functionals_to_morphism(self.src, self.tgt, funcs, shift=m)
        vecs = {n: {a: la.mat([[x] for x in v]) if v else la.zeros(0, 1) for a, v in d.items()} for n, d in parts.items()}
        return vectors_to_morphism(self.src, self.tgt, vecs, shift=m)

    def vector_from(self, m, parts: Mapping) -> RatMatrix:
        """Inverse of split: parts[n][a] -> row/column vector (RatMatrix) or list."""
        v = la.zeros(self.dim(m), 1)
        for (n, a, k) in self.blocks.get(m, ()):
            x = parts.get(n, {}).get(a)
            if x is None:
                continue
            if isinstance(x, RatMatrix):
                x = [x[0, r] for r in range(k)] if x.nrows() == 1 else [x[r, 0] for r in range(k)]
            o = self.offsets[(m, n, a)]
            for r in range(k):
                v[o + r, 0] = x[r]
        return v


def hom_into_injective(F, I: GeneratorComplex, degrees=None) -> HomComplex:
    """Hom^m(F, I) = sum over generators g of I (degree n, cell t) of F^{n-m}(t)^*."""
    if I.kind != "inj":
        raise ValueError("target must be injective")
    fdeg = F.degrees
    if not fdeg or not I.gens:
        return HomComplex("into_inj", F, I, {}, {})
    ms = range(I.lo - fdeg[-1] - 1, I.hi - fdeg[0] + 2) if degrees is None else degrees
    blocks = {}
    for m in ms:
        bl = []
        for n in I.degrees:
            for a, t in enumerate(I.gens[n]):
                k = F.dim(n - m, t)
                if k:
                    bl.append((n, a, k))
        if bl:
            blocks[m] = bl
    H = HomComplex("into_inj", F, I, blocks, {})
    for m in blocks:
        if m + 1 not in blocks:
            continue
        M = la.zeros(H.dim(m + 1), H.dim(m))
        sgn = -1 if m % 2 == 0 else 1     # -(-1)^m
        for (n, a, k) in blocks[m]:
            c0 = H.offsets[(m, n, a)]
            t = I.gens[n][a]
            # d_I after h: coefficient D_I[g', g] times h_g composed with restriction at cell(g')
            if n in I.D:
                col = I.D[n]
                for b in range(col.nrows()):
                    e = col[b, a]
                    if e == 0:
                        continue
                    t2 = I.gens[n + 1][b]
                    if (m + 1, n + 1, b) not in H.offsets:
                        continue
                    r0 = H.offsets[(m + 1, n + 1, b)]
                    R = F.res_map(n - m, t2, t)            # F^{n-m}(t2) -> F^{n-m}(t)
                    _add(M, r0, c0, R.transpose(), e)
            # -(-1)^m h after d_F: (h_g d_F) lives in the block of g, degree m+1
            if (m + 1, n, a) in H.offsets and F.dim(n - m - 1, t):
                r0 = H.offsets[(m + 1, n, a)]
                _add(M, r0, c0, F.diff(n - m - 1, t).transpose(), sgn)
        H.D[m] = M
    return H


def hom_from_projective(Pm: GeneratorComplex, F, degrees=None) -> HomComplex:
    """Hom^m(P, F) = sum over generators g of P (degree n, cell s) of F^{n+m}(s)."""
    if Pm.kind != "proj":
        raise ValueError("source must be projective")
    fdeg = F.degrees
    if not fdeg or not Pm.gens:
        return HomComplex("from_proj", Pm, F, {}, {})
    ms = range(fdeg[0] - Pm.hi - 1, fdeg[-1] - Pm.lo + 2) if degrees is None else degrees
    blocks = {}
    for m in ms:
        bl = []
        for n in Pm.degrees:
            for a, s in enumerate(Pm.gens[n]):
                k = F.dim(n + m, s)
                if k:
                    bl.append((n, a, k))
        if bl:
            blocks[m] = bl
    H = HomComplex("from_proj", Pm, F, blocks, {})
    for m in blocks:
        if m + 1 not in blocks:
            continue
        M = la.zeros(H.dim(m + 1), H.dim(m))
        sgn = -1 if m % 2 == 0 else 1
        for (n, a, k) in blocks[m]:
            c0 = H.offsets[(m, n, a)]
            s = Pm.gens[n][a]
            # d_F after h
            if (m + 1, n, a) in H.offsets and F.dim(n + m + 1, s):
                _add(M, H.offsets[(m + 1, n, a)], c0, F.diff(n + m, s), 1)
            # -(-1)^m h after d_P: (h d_P)_g = sum_{h'} D_P[h', g] res h_{h'} for g of degree n-1
            if n - 1 in Pm.D:
                Dm = Pm.D[n - 1]
                for g in range(Dm.ncols()):
                    e = Dm[a, g]
                    if e == 0:
                        continue
                    s2 = Pm.gens[n - 1][g]
                    if (m + 1, n - 1, g) not in H.offsets:
                        continue
                    R = F.res_map(n + m, s, s2)
                    _add(M, H.offsets[(m + 1, n - 1, g)], c0, R, sgn * e)
        H.D[m] = M
    return H


def _add(M, r0, c0, blk, scale):
    for r, row in enumerate(la.to_rows(blk)):
        for c, e in enumerate(row):
            if e != 0:
                M[r0 + r, c0 + c] = M[r0 + r, c0 + c] + scale * e


# -- derived Hom ------------------------------------------------------------

@dataclass
class DerivedHomResult:
    graded_dims: dict
    representatives: dict
    resolution: ProjectiveModel
    hom: HomComplex


def derived_hom(A, B, rep_degrees=(0,)) -> DerivedHomResult:
    """Ext^n(A, B) = H^n Hom(P(A), B) with representative chain maps P(A)[-n] -> B."""
    if A.cellset != B.cellset:
        raise ValueError("base mismatch")
    PA = projective_model(A)
    H = hom_from_projective(PA.model, B)
    dims = H.betti()
    reps = {}
    for n in rep_degrees:
        Z, _ = H.cohomology(n)
        reps[n] = [H.to_morphism(n, la.column(Z, j)) for j in range(Z.ncols())]
    return DerivedHomResult(dims, reps, PA, H)


# -- pushforwards ------------------------------------------------------------

def restrict(K, sel):
    return K.restrict(sel)


def extend_by_zero_closed(K: SheafComplex, into) -> SheafComplex:
    """Pushforward along a closed inclusion: stalks of K on its (down-closed) domain, zero elsewhere."""
    P = K.poset
    target = _cells_of(P, into)
    tset = set(target)
    if not K.cellset <= tset:
        raise ValueError("closed set not inside the target")
    for i in K.cells:
        if not (P.below(i) & tset) <= K.cellset:
            raise ValueError("set is not down-closed in the target")
    return SheafComplex(P, target, K.dims, K.res, K.d, check=False)


def closed_unit(M: SheafComplex, Z) -> SheafMorphism:
    """Canonical map M -> j_* j^* M for a closed set Z: identity on Z, zero elsewhere."""
    zc = set(_cells_of(M.poset, Z))
    E = extend_by_zero_closed(M.restrict(zc), M.cells)
    comps = {n: {i: la.identity(v) for i, v in m.items() if i in zc} for n, m in M.dims.items()}
    return SheafMorphism(M, E, comps)


@dataclass
class Pushforward:
    complex: SheafComplex
    chain_layout: dict     # cell -> (blocks, offsets) of its stalk
    source: SheafComplex

    def unit(self, M: SheafComplex, comparison: SheafMorphism | None = None) -> SheafMorphism:
        """Chain map M -> Ri_*K sending x to the length-0 family (u(res x))."""
        K = self.source
        comps = {}
        for x in self.complex.cells:
            blocks, offs = self.chain_layout[x]
            for q in M.degrees:
                mx = M.dim(q, x)
                tx = self.complex.dim(q, x)
                if not mx or not tx:
                    continue
                C = la.zeros(tx, mx)
                for (k, c, qq, m) in blocks.get(q, ()):
                    if k != 0 or qq != q:
                        continue
                    t = c[0]
                    R = M.res_map(q, x, t)
                    u = comparison.comp(q, t) if comparison is not None else la.identity(M.dim(q, t))
                    _put(C, offs[(c, q)], 0, u * R)
                comps.setdefault(q, {})[x] = C
        f = SheafMorphism(M, self.complex, comps)
        f.validate()
        return f


def derived_pushforward_open(K: SheafComplex, into) -> Pushforward:
    """Chain-of-cells model of Ri_*K for K on an up-closed set U.

    The stalk at x is the total chain-of-cells complex of K over
    {t in U : t >= x}; restrictions project onto chains of the smaller star.
    """
    from .sheafcx import chains
    P = K.poset
    target = _cells_of(P, into)
    U = K.cellset
    for i in U:
        if not (P.above(i) & set(target)) <= U:
            raise ValueError("U is not up-closed in the target")
    layout = {}
    dims: dict[int, dict] = {}
    d: dict[int, dict] = {}
    for x in target:
        star = [t for t in P.above(x) if t in U]
        ch = chains(P, star)
        blocks: dict[int, list] = {}
        for k, L in enumerate(ch):
            for c in L:
                for q in K.degrees:
                    m = K.dim(q, c[-1])
                    if m:
                        blocks.setdefault(k + q, []).append((k, c, q, m))
        offs = {}
        for n, bl in blocks.items():
            o = 0
            for (k, c, q, m) in bl:
                offs[(c, q)] = o
                o += m
            dims.setdefault(n, {})[x] = o
        layout[x] = (blocks, offs)
        for n in blocks:
            if n + 1 not in blocks:
                continue
            M = la.zeros(dims[n + 1][x], dims[n][x])
            for (k, c, q, m) in blocks[n]:
                if K.dim(q + 1, c[-1]):
                    _put(M, offs[(c, q + 1)], offs[(c, q)], K.diff(q, c[-1]), -1 if k % 2 else 1)
            for (k1, c1, q, m1) in blocks[n + 1]:
                if k1 == 0:
                    continue
                r0 = offs[(c1, q)]
                for i in range(k1 + 1):
                    face = c1[:i] + c1[i + 1:]
                    if (face, q) not in offs:
                        continue
                    sg = -1 if i % 2 else 1
                    blk = la.identity(m1) if i < k1 else K.res_map(q, face[-1], c1[-1])
                    _add(M, r0, offs[(face, q)], blk, sg)
            d.setdefault(n, {})[x] = M
    res: dict[int, dict] = {}
    for x in target:
        for y, _ in P.cofaces[x]:
            if y not in set(target):
                continue
            bx, ox = layout[x]
            by, oy = layout[y]
            for n in set(bx) & set(by):
                R = la.zeros(dims[n][y], dims[n][x])
                for (k, c, q, m) in by[n]:
                    for r in range(m):
                        R[oy[(c, q)] + r, ox[(c, q)] + r] = 1
                res.setdefault(n, {})[(x, y)] = R
    C = SheafComplex(P, target, dims, res, d, check=False)
    return Pushforward(C, layout, K)


def pushforward_injective(I: GeneratorComplex, into) -> GeneratorComplex:
    """Ri_* of an injective complex on an up-closed set: the same generators on the larger domain."""
    P = I.poset
    target = set(_cells_of(P, into))
    for i in I.cells:
        if not (P.above(i) & target) <= I.cellset:
            raise ValueError("domain is not up-closed in the target")
    return I.on_domain(target)


def precompose(H1: HomComplex, H2: HomComplex, u: SheafMorphism, m: int) -> RatMatrix:
    """u^*: Hom^m(X, I) -> Hom^m(Y, I) for a chain map u: Y -> X (same injective target)."""
    if H1.kind != "into_inj" or H2.kind != "into_inj":
        raise ValueError("precompose needs Hom complexes into an injective")
    M = la.zeros(H2.dim(m), H1.dim(m))
    for (n, a, k) in H2.blocks.get(m, ()):
        if (m, n, a) not in H1.offsets:
            continue
        t = H2.tgt.gens[n][a]
        U = u.comp(n - m, t)
        _add(M, H2.offsets[(m, n, a)], H1.offsets[(m, n, a)], U.transpose(), 1)
    return M


def postcompose(H1: HomComplex, H2: HomComplex, u: SheafMorphism, m: int) -> RatMatrix:
    """u_*: Hom^m(P, X) -> Hom^m(P, Y) for a chain map u: X -> Y (same projective source)."""
    if H1.kind != "from_proj" or H2.kind != "from_proj":
        raise ValueError("postcompose needs Hom complexes out of a projective")
    M = la.zeros(H2.dim(m), H1.dim(m))
    for (n, a, k) in H1.blocks.get(m, ()):
        if (m, n, a) not in H2.offsets:
            continue
        s = H1.src.gens[n][a]
        _add(M, H2.offsets[(m, n, a)], H1.offsets[(m, n, a)], u.comp(n + m, s), 1)
    return M


def injective_map_coefficients(src: GeneratorComplex, tgt: GeneratorComplex, funcs) -> dict[int, RatMatrix]:
    """Coefficient matrices of a chain map between injective complexes.

    funcs[n][g] is the functional of target generator g on the stalk src^n(cell g),
    in the order of src.stalk_index(n, cell g).
    """
    out = {}
    for n, cs in tgt.gens.items():
        if n not in src.gens:
            continue
        M = la.zeros(len(cs), len(src.gens[n]))
        for g, t in enumerate(cs):
            f = funcs.get(n, {}).get(g)
            if f is None:
                continue
            for pos, h in enumerate(src.stalk_index(n, t)):
                if f[0, pos] != 0:
                    M[g, h] = f[0, pos]
        out[n] = M
    return out
