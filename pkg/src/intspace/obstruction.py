"""Local-to-global spectral sequence of a sheaf complex and the window scan.

The double complex has columns indexed by cell dimension (cellular model,
closed domains) or chain length (chain-of-cells model, any convex domain),
rows by the sheaf degree q.  Pages are computed from the filtration by
columns.  By default each column is first replaced by its vertical
cohomology via homotopy transfer; the transferred complex is filtered
homotopy equivalent to the original, so every page from E_1 on agrees.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import exactla as la
from .exactla import RatMatrix
from .sheafcx import InvariantViolation, chains


@dataclass
class SpectralPage:
    r: int
    entries: dict            # (p, q) -> dim
    differentials: dict      # (p, q) -> RatMatrix  E_r^{p,q} -> E_r^{p+r, q-r+1}

    def rank(self, p, q) -> int:
        m = self.differentials.get((p, q))
        return la.rank(m) if m is not None else 0

    def nonzero(self, p, q) -> bool:
        m = self.differentials.get((p, q))
        return m is not None and not la.is_zero(m)

    def total(self) -> int:
        return sum(self.entries.values())

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "entries": [[p, q, v] for (p, q), v in sorted(self.entries.items()) if v],
            "differential_ranks": [[p, q, self.rank(p, q)] for (p, q) in sorted(self.differentials)
                                   if self.rank(p, q)],
        }


# -- double complex data ------------------------------------------------------

@dataclass
class DoubleComplex:
    """Blocks (p, key, cell) carrying the stalk complex of K at ``cell``.

    horiz[(src_block, dst_block)] = (scalar, use_restriction): the horizontal
    map in every degree q is scalar * (identity or restriction cell_src -> cell_dst).
    """
    K: object
    blocks: list
    horiz: dict

    def column_spread(self) -> int:
        ps = [b[0] for b in self.blocks]
        return (max(ps) - min(ps)) if ps else 0


def cellular_double_complex(K) -> DoubleComplex:
    P = K.poset
    for i in K.cells:
        if not P.below(i) <= K.cellset:
            raise ValueError("cellular model needs a down-closed domain")
    blocks = [(P.dims[i], i, i) for i in sorted(K.cells, key=lambda c: (P.dims[c], c))]
    bidx = {b[1]: n for n, b in enumerate(blocks)}
    horiz = {}
    for i in K.cells:
        for j, s in P.cofaces[i]:
            if j in K.cellset:
                horiz[(bidx[i], bidx[j])] = (s, True)
    return DoubleComplex(K, blocks, horiz)


def chain_double_complex(K) -> DoubleComplex:
    P = K.poset
    ch = chains(P, K.cells)
    blocks = [(k, c, c[-1]) for k, L in enumerate(ch) for c in L]
    bidx = {b[1]: n for n, b in enumerate(blocks)}
    horiz = {}
    for k1, L in enumerate(ch):
        if k1 == 0:
            continue
        for c1 in L:
            for i in range(k1 + 1):
                face = c1[:i] + c1[i + 1:]
                sg = -1 if i % 2 else 1
                horiz[(bidx[face], bidx[c1])] = (sg, i == k1)
    return DoubleComplex(K, blocks, horiz)


def double_complex(K, model: str = "auto") -> DoubleComplex:
    if model == "cellular":
        return cellular_double_complex(K)
    if model == "chain":
        return chain_double_complex(K)
    P = K.poset
    closed = all(P.below(i) <= K.cellset for i in K.cells)
    return cellular_double_complex(K) if closed else chain_double_complex(K)


# -- filtered complexes -------------------------------------------------------

@dataclass
class FilteredComplex:
    """Total complex with a basis adapted to the column filtration.

    basis[n] is a list of (p, q) labels for the basis vectors of degree n;
    D[n]: degree n -> n+1.  The filtration F^p is spanned by vectors with
    label p' >= p.
    """
    basis: dict
    D: dict

    def dim(self, n):
        return len(self.basis.get(n, ()))

    def d(self, n) -> RatMatrix:
        return self.D.get(n, la.zeros(self.dim(n + 1), self.dim(n)))


def _raw_layout(dc: DoubleComplex):
    K = dc.K
    layout = {}       # n -> list of (block index, q, size)
    for b, (p, key, cell) in enumerate(dc.blocks):
        for q in K.degrees:
            m = K.dim(q, cell)
            if m:
                layout.setdefault(p + q, []).append((b, q, m))
    offs, tot = {}, {}
    for n, L in layout.items():
        o = 0
        for (b, q, m) in L:
            offs[(b, q)] = (n, o)
            o += m
        tot[n] = o
    return layout, offs, tot


def _horizontal(dc: DoubleComplex, layout, offs, tot):
    """delta_n: C^n -> C^{n+1} (horizontal part of the total differential)."""
    K = dc.K
    out_edges: dict[int, list] = {}
    for (a, b), v in dc.horiz.items():
        out_edges.setdefault(a, []).append((b, v))
    delta = {}
    for n, L in layout.items():
        if n + 1 not in layout:
            continue
        M = la.zeros(tot[n + 1], tot[n])
        for (a, q, m) in L:
            _, c0 = offs[(a, q)]
            for b, (s, use_res) in out_edges.get(a, ()):
                if (b, q) not in offs:
                    continue
                _, r0 = offs[(b, q)]
                ca, cb = dc.blocks[a][2], dc.blocks[b][2]
                blk = K.res_map(q, ca, cb) if use_res and ca != cb else la.identity(m)
                _acc(M, r0, c0, blk, s)
        delta[n] = M
    return delta


def _acc(M, r0, c0, blk, s):
    for r, row in enumerate(la.to_rows(blk)):
        for c, e in enumerate(row):
            if e != 0:
                M[r0 + r, c0 + c] = M[r0 + r, c0 + c] + s * e


def raw_filtered(dc: DoubleComplex) -> FilteredComplex:
    """The unreduced total complex D = delta + (-1)^p d with its column labels."""
    K = dc.K
    layout, offs, tot = _raw_layout(dc)
    delta = _horizontal(dc, layout, offs, tot)
    basis = {n: [(dc.blocks[b][0], q) for (b, q, m) in L for _ in range(m)] for n, L in layout.items()}
    D = {}
    for n, L in layout.items():
        if n + 1 not in layout:
            continue
        M = delta[n]
        for (b, q, m) in L:
            p, _, cell = dc.blocks[b]
            if (b, q + 1) in offs:
                _acc(M, offs[(b, q + 1)][1], offs[(b, q)][1], K.diff(q, cell), -1 if p % 2 else 1)
        D[n] = M
    return FilteredComplex(basis, D)


def _sdr(K, cell, sign):
    """Strong deformation retract of the stalk complex (K(cell), sign * d) onto its cohomology.

    Returns per degree q: (i_q, pi_q, h_q) with h_q: V^q -> V^{q-1}.
    """
    out = {}
    Wd = {}
    for q in K.degrees:
        m = K.dim(q, cell)
        if not m:
            continue
        W_prev = Wd.get(q - 1)
        v = la.scalar_mul(sign, K.diff(q, cell)) if K.dim(q + 1, cell) else la.zeros(0, m)
        Z = la.kernel(v) if v.nrows() else la.identity(m)
        vp = la.scalar_mul(sign, K.diff(q - 1, cell)) if K.dim(q - 1, cell) else None
        if vp is not None and W_prev is not None and W_prev.ncols():
            Bb = vp * W_prev
        else:
            Bb = la.zeros(m, 0)
        Hb = la.select_columns(Z, la.complement_columns(Bb, Z))
        Wb = la.select_columns(la.identity(m), la.complement_columns(Z, la.identity(m)))
        Q = la.hstack([Bb, Hb, Wb])
        if Q.ncols() != m:
            raise InvariantViolation("vertical homotopy basis is not square")
        Qi = Q.inv()
        nb, nh = Bb.ncols(), Hb.ncols()
        pi = la.submatrix(Qi, list(range(nb, nb + nh)), list(range(m)))
        if nb:
            bco = la.submatrix(Qi, list(range(nb)), list(range(m)))
            h = la.scalar_mul(-1, W_prev * bco)
        else:
            h = None
        out[q] = (Hb, pi, h)
        Wd[q] = Wb
    return out


def transferred_filtered(dc: DoubleComplex) -> FilteredComplex:
    """Homotopy transfer of the double complex onto column-wise vertical cohomology."""
    K = dc.K
    layout, offs, tot = _raw_layout(dc)
    delta = _horizontal(dc, layout, offs, tot)
    cache = {}
    sdr = {}
    for b, (p, key, cell) in enumerate(dc.blocks):
        k = (cell, p % 2)
        if k not in cache:
            cache[k] = _sdr(K, cell, -1 if p % 2 else 1)
        sdr[b] = cache[k]
    # assemble i_n (C^n <- H^n), pi_n, h_n (C^n -> C^{n-1})
    hb, basis = {}, {}
    for n, L in layout.items():
        o = 0
        for (b, q, m) in L:
            k = sdr[b][q][0].ncols()
            hb[(b, q)] = (o, k)
            o += k
        basis[n] = [(dc.blocks[b][0], q) for (b, q, m) in L for _ in range(hb[(b, q)][1])]
    I, PI, H = {}, {}, {}
    for n, L in layout.items():
        kn = len(basis[n])
        I[n] = la.zeros(tot[n], kn)
        PI[n] = la.zeros(kn, tot[n])
        if n - 1 in layout:
            H[n] = la.zeros(tot[n - 1], tot[n])
        for (b, q, m) in L:
            i_q, pi_q, h_q = sdr[b][q]
            _, c0 = offs[(b, q)]
            r0, k = hb[(b, q)]
            if k:
                _acc(I[n], c0, r0, i_q, 1)
                _acc(PI[n], r0, c0, pi_q, 1)
            if h_q is not None and n - 1 in layout:
                _acc(H[n], offs[(b, q - 1)][1], c0, h_q, 1)
    D = {}
    for n in layout:
        if n + 1 not in layout or not basis[n] or not basis[n + 1]:
            continue
        X = delta[n] * I[n]
        acc = X
        if n + 1 in H:
            T = delta[n] * H[n + 1]
            for _ in range(dc.column_spread() + 1):
                X = T * X
                if la.is_zero(X):
                    break
                acc = acc + X
        D[n] = PI[n + 1] * acc
    F = FilteredComplex(basis, D)
    for n in D:
        if n + 1 in D and not la.is_zero(D[n + 1] * D[n]):
            raise InvariantViolation("transferred differential does not square to zero")
    return F


# -- pages ---------------------------------------------------------------------

def _sel(labels, pred):
    return [k for k, (p, q) in enumerate(labels) if pred(p)]


def _coord_sub(dim, idx):
    M = la.zeros(dim, len(idx))
    for c, r in enumerate(idx):
        M[r, c] = 1
    return M


def _Z(F: FilteredComplex, n, p, r):
    """Basis (columns) of Z_r^p in degree n: x in F^p with Dx in F^{p+r}."""
    labels = F.basis.get(n, [])
    cols = _sel(labels, lambda x: x >= p)
    Fp = _coord_sub(len(labels), cols)
    if not cols:
        return Fp
    tl = F.basis.get(n + 1, [])
    low = _sel(tl, lambda x: x < p + r)
    if not low:
        return Fp
    A = la.submatrix(F.d(n), low, cols)
    return Fp * la.kernel(A) if A.nrows() else Fp


def _page_data(F: FilteredComplex, n, p, r):
    """(reps, denominator) for E_r^p in degree n."""
    Z = _Z(F, n, p, r)
    Zs = _Z(F, n, p + 1, r - 1)
    Zb = _Z(F, n - 1, p - r + 1, r - 1)
    Bd = F.d(n - 1) * Zb if Zb.ncols() and F.dim(n - 1) else la.zeros(F.dim(n), 0)
    den = la.hstack([Zs, Bd]) if (Zs.ncols() + Bd.ncols()) else la.zeros(F.dim(n), 0)
    reps = la.select_columns(Z, la.complement_columns(den, Z))
    return reps, den


def filtered_pages(F: FilteredComplex, r_min: int, r_max: int) -> list[SpectralPage]:
    ps = sorted({p for L in F.basis.values() for (p, q) in L})
    if not ps:
        return [SpectralPage(r, {}, {}) for r in range(r_min, r_max + 1)]
    pages = []
    for r in range(r_min, r_max + 1):
        data = {}
        for n in F.basis:
            for p in ps:
                data[(n, p)] = _page_data(F, n, p, r)
        entries = {(p, n - p): data[(n, p)][0].ncols() for (n, p) in data if data[(n, p)][0].ncols()}
        diffs = {}
        for (n, p), (reps, den) in data.items():
            if not reps.ncols():
                continue
            tgt = data.get((n + 1, p + r))
            if tgt is None or not tgt[0].ncols():
                continue
            y = F.d(n) * reps
            diffs[(p, n - p)] = la.coords_modulo(tgt[0], tgt[1], y)
        pages.append(SpectralPage(r, entries, diffs))
    return pages


def filtered_betti(F: FilteredComplex) -> dict[int, int]:
    out = {}
    for n in F.basis:
        h = F.dim(n) - la.rank(F.d(n)) - la.rank(F.d(n - 1))
        if h:
            out[n] = h
    return out


@dataclass
class SpectralSequence:
    pages: list
    hyper: dict
    spread: int
    filtered: FilteredComplex = field(repr=False, default=None)

    def page(self, r) -> SpectralPage:
        for pg in self.pages:
            if pg.r == r:
                return pg
        raise KeyError(r)

    @property
    def E_inf(self) -> SpectralPage:
        return self.pages[-1]


def spectral_sequence(K, r_max: int | None = None, model: str = "auto", reduce: bool = True,
                      r_min: int = 2) -> SpectralSequence:
    dc = double_complex(K, model)
    F = transferred_filtered(dc) if reduce else raw_filtered(dc)
    spread = dc.column_spread()
    stop = spread + 1 if r_max is None else r_max
    stop = max(stop, r_min)
    pages = filtered_pages(F, r_min, stop)
    return SpectralSequence(pages, filtered_betti(F), spread, F)


def ss_pages(K, r_max: int | None = None, **kw) -> list[SpectralPage]:
    """Pages E_2 .. E_{r_max} (default: until the sequence has stabilised)."""
    if r_max is not None and r_max < 2:
        raise ValueError("r_max must be at least 2")
    return spectral_sequence(K, r_max, **kw).pages


def check_convergence(ss: SpectralSequence) -> bool:
    last = ss.pages[-1] if ss.spread + 1 <= ss.pages[-1].r else None
    if last is None:
        return True
    tot: dict[int, int] = {}
    for (p, q), v in last.entries.items():
        tot[p + q] = tot.get(p + q, 0) + v
    tot = {n: v for n, v in tot.items() if v}
    return tot == ss.hyper


def check_dd_zero(pages) -> bool:
    for pg in pages:
        for (p, q), m in pg.differentials.items():
            nxt = pg.differentials.get((p + pg.r, q - pg.r + 1))
            if nxt is not None and not la.is_zero(nxt * m):
                return False
    return True


def check_page_succession(pages) -> bool:
    """Entries of page r+1 equal ker/im dimensions of page r."""
    for a, b in zip(pages, pages[1:]):
        keys = set(a.entries) | set(b.entries)
        for (p, q) in keys:
            out = a.rank(p, q)
            inc = a.rank(p - a.r, q + a.r - 1)
            if a.entries.get((p, q), 0) - out - inc != b.entries.get((p, q), 0):
                return False
    return True


# -- obstruction scan ------------------------------------------------------------

@dataclass
class ObstructionReport:
    verdict: str
    witnesses: list
    qbar: int
    pages_used: int

    def to_json(self):
        return {"verdict": self.verdict, "qbar": self.qbar,
                "witnesses": [{"r": r, "p": p, "q": q, "rank": k} for (r, p, q, k) in self.witnesses]}


def obstruction_scan(K, qbar: int, ss: SpectralSequence | None = None) -> ObstructionReport:
    """Nonzero d_r^{p,q} with r >= 2 and qbar < q <= qbar + r - 1."""
    if qbar < 0:
        raise ValueError("qbar must be nonnegative")
    ss = ss or spectral_sequence(K)
    wit = []
    for pg in ss.pages:
        for (p, q), m in sorted(pg.differentials.items()):
            if qbar < q <= qbar + pg.r - 1 and not la.is_zero(m):
                wit.append((pg.r, p, q, la.rank(m)))
    return ObstructionReport("OBSTRUCTED" if wit else "CLEAR", wit, qbar, len(ss.pages))


def ascii_page(pg: SpectralPage) -> str:
    """Grid with q increasing upwards and p to the right, like a printed table."""
    if not pg.entries:
        return f"E_{pg.r}: (zero)"
    ps = [p for p, _ in pg.entries]
    qs = [q for _, q in pg.entries]
    p0, p1, q0, q1 = min(0, min(ps)), max(ps), min(0, min(qs)), max(qs)
    w = max(2, max(len(str(v)) for v in pg.entries.values()) + 1)
    lines = [f"E_{pg.r}"]
    for q in range(q1, q0 - 1, -1):
        row = "".join(str(pg.entries.get((p, q), 0)).rjust(w) for p in range(p0, p1 + 1))
        lines.append(f"q={q:>2} |" + row)
    lines.append("      +" + "-" * (w * (p1 - p0 + 1)))
    lines.append("   p=  " + "".join(str(p).rjust(w) for p in range(p0, p1 + 1)))
    return "\n".join(lines)
