"""Face posets of regular cell complexes together with a stratification.

Cells carry string identifiers and are indexed internally in sorted
identifier order.  All order queries (``below``, ``above``) work with those
integer indices.
"""
from __future__ import annotations

import graphlib
import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence


class StratumNotClosed(ValueError):
    """A cell of a closed stratum union has a face outside of it."""

    def __init__(self, cell, face):
        super().__init__(f"stratum closure violated: face {face!r} of {cell!r} lies in a shallower stratum")
        self.cell, self.face = cell, face


class ForbiddenCodimensionOne(ValueError):
    pass


class InvalidSpace(ValueError):
    pass


TOP = "top"


class StratifiedPoset:
    """Face poset with signed incidences, a stratum per cell and codimensions per stratum."""

    def __init__(self, cells: Mapping[str, int], incidence: Iterable[tuple[str, str, int]],
                 strata: Mapping[str, int] | None = None, assignment: Mapping[str, str] | None = None,
                 vertices: Mapping[str, tuple] | None = None, validate: bool = True):
        self.ids: tuple[str, ...] = tuple(sorted(cells))
        if len(self.ids) != len(cells):
            raise InvalidSpace("duplicate cell ids")
        self.index = {c: i for i, c in enumerate(self.ids)}
        self.dims = [int(cells[c]) for c in self.ids]
        self.n = len(self.ids)
        self.dim = max(self.dims) if self.dims else -1
        self.faces: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        self.cofaces: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        self.sign: dict[tuple[int, int], int] = {}
        for cof, face, s in incidence:
            if cof not in self.index or face not in self.index:
                raise InvalidSpace(f"incidence mentions unknown cell {cof!r} or {face!r}")
            a, b = self.index[cof], self.index[face]
            if self.dims[a] != self.dims[b] + 1:
                raise InvalidSpace(f"incidence {cof}->{face} is not of codimension one")
            if s not in (1, -1):
                raise InvalidSpace(f"incidence sign must be +-1, got {s}")
            if (a, b) in self.sign:
                raise InvalidSpace(f"duplicate incidence {cof}->{face}")
            self.sign[(a, b)] = s
            self.faces[a].append((b, s))
            self.cofaces[b].append((a, s))
        for L in self.faces:
            L.sort()
        for L in self.cofaces:
            L.sort()
        self.vertices = dict(vertices) if vertices else None
        strata = dict(strata) if strata is not None else {TOP: 0}
        assignment = dict(assignment) if assignment is not None else {c: TOP for c in self.ids}
        self.strata: dict[str, int] = {k: int(v) for k, v in sorted(strata.items())}
        missing = [c for c in self.ids if c not in assignment]
        if missing:
            raise InvalidSpace(f"cells without a stratum: {missing[:5]}")
        self.stratum_of = [assignment[c] for c in self.ids]
        for s in set(self.stratum_of):
            if s not in self.strata:
                raise InvalidSpace(f"unknown stratum {s!r}")
        self.codim_of = [self.strata[s] for s in self.stratum_of]
        self._below: list[frozenset] | None = None
        self._above: list[frozenset] | None = None
        if validate:
            self.validate()

    # -- order ---------------------------------------------------------
    def _closures(self):
        order = sorted(range(self.n), key=lambda i: self.dims[i])
        below: list = [None] * self.n
        for i in order:
            s = {i}
            for j, _ in self.faces[i]:
                s |= below[j]
            below[i] = frozenset(s)
        above: list = [None] * self.n
        for i in reversed(order):
            s = {i}
            for j, _ in self.cofaces[i]:
                s |= above[j]
            above[i] = frozenset(s)
        self._below, self._above = below, above

    def below(self, i: int) -> frozenset:
        """All cells <= i (the closed cell)."""
        if self._below is None:
            self._closures()
        return self._below[i]

    def above(self, i: int) -> frozenset:
        """All cells >= i (the open star)."""
        if self._above is None:
            self._closures()
        return self._above[i]

    def leq(self, i: int, j: int) -> bool:
        return i in self.below(j)

    def linear_extension(self, cells: Iterable[int] | None = None) -> list[int]:
        cells = range(self.n) if cells is None else cells
        return sorted(cells, key=lambda i: (self.dims[i], i))

    # -- validation ----------------------------------------------------
    def validate(self):
        # boundary of boundary
        for t in range(self.n):
            acc: dict[int, int] = {}
            for s, a in self.faces[t]:
                for r, b in self.faces[s]:
                    acc[r] = acc.get(r, 0) + a * b
            bad = [r for r, v in acc.items() if v]
            if bad:
                raise InvalidSpace(f"boundary of boundary nonzero at {self.ids[t]} -> {self.ids[bad[0]]}")
        for name, k in self.strata.items():
            if k == 1:
                raise ForbiddenCodimensionOne(f"stratum {name!r} has codimension 1")
            if k < 0:
                raise InvalidSpace(f"negative codimension for {name!r}")
        used = set(self.codim_of)
        if self.n and 0 not in used:
            raise InvalidSpace("no top stratum of codimension 0")
        # X_{d-k} = cells of codim >= k must be down-closed
        for i in range(self.n):
            for j, _ in self.faces[i]:
                if self.codim_of[j] < self.codim_of[i]:
                    raise StratumNotClosed(self.ids[i], self.ids[j])
        for i in range(self.n):
            if self.codim_of[i] > 0 and self.dims[i] > self.dim - self.codim_of[i]:
                raise InvalidSpace(f"cell {self.ids[i]} of dim {self.dims[i]} too big for codim {self.codim_of[i]}")

    # -- selections ----------------------------------------------------
    def all_cells(self) -> "Selection":
        return Selection(self, frozenset(range(self.n)), "closed")

    def singular_codims(self) -> list[int]:
        return sorted({k for k in self.codim_of if k > 0})

    def open_complement(self, k: int) -> "Selection":
        """U_k: cells in strata of codimension < k."""
        return Selection(self, frozenset(i for i in range(self.n) if self.codim_of[i] < k), "open")

    def stratum_cells(self, k: int) -> "Selection":
        """Cells of all strata of codimension exactly k (closed inside U_{k+1})."""
        return Selection(self, frozenset(i for i in range(self.n) if self.codim_of[i] == k), "stratum")

    def star_subposet(self, sigma, within: "Selection") -> list[int]:
        i = self.index[sigma] if isinstance(sigma, str) else sigma
        if not 0 <= i < self.n:
            raise KeyError(f"unknown cell {sigma!r}")
        return sorted(j for j in self.above(i) if j in within.cells)

    def selection(self, ids: Iterable[str], kind: str = "closed") -> "Selection":
        try:
            return Selection(self, frozenset(self.index[c] for c in ids), kind)
        except KeyError as e:
            raise KeyError(f"unknown cell {e.args[0]!r}") from None

    def with_strata(self, assignment: Mapping[str, str], codims: Mapping[str, int]) -> "StratifiedPoset":
        return assign_strata(self, assignment, codims)

    def euler_characteristic(self) -> int:
        return sum((-1) ** d for d in self.dims)

    def f_vector(self) -> list[int]:
        out = [0] * (self.dim + 1)
        for d in self.dims:
            out[d] += 1
        return out

    def is_simplicial(self) -> bool:
        return self.vertices is not None

    def __repr__(self):
        return f"StratifiedPoset({self.n} cells, dim {self.dim}, strata {self.strata})"


@dataclass(frozen=True)
class Selection:
    """A locally closed set of cells of ``parent`` (open, closed, or stratum)."""
    parent: StratifiedPoset
    cells: frozenset
    kind: str = "closed"

    def __post_init__(self):
        p = self.parent
        if self.kind == "open":
            for i in self.cells:
                if not p.above(i) <= self.cells:
                    raise InvalidSpace(f"open selection not up-closed at {p.ids[i]}")
        elif self.kind == "closed":
            for i in self.cells:
                if not p.below(i) <= self.cells:
                    raise InvalidSpace(f"closed selection not down-closed at {p.ids[i]}")
        elif self.kind == "stratum":
            if not self.is_convex():
                raise InvalidSpace("stratum selection is not locally closed")
        else:
            raise ValueError(f"unknown selection kind {self.kind!r}")

    def is_convex(self) -> bool:
        p = self.parent
        for i in self.cells:
            for j in p.above(i):
                if j in self.cells:
                    continue
                # j not selected; nothing above j may be selected
                if any(k in self.cells for k in p.above(j)):
                    return False
        return True

    @property
    def members(self) -> list[int]:
        return sorted(self.cells)

    def __contains__(self, i) -> bool:
        return i in self.cells

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.members)

    def is_down_closed(self) -> bool:
        return all(self.parent.below(i) <= self.cells for i in self.cells)

    def ids(self) -> list[str]:
        return [self.parent.ids[i] for i in self.members]


def assign_strata(p: StratifiedPoset, assignment: Mapping[str, str], codims: Mapping[str, int]) -> StratifiedPoset:
    """Copy of p with a new stratification, validated."""
    inc = [(p.ids[a], p.ids[b], s) for (a, b), s in p.sign.items()]
    return StratifiedPoset(dict(zip(p.ids, p.dims)), inc, codims, assignment, p.vertices)


# -- simplicial builders ----------------------------------------------

def _vlabel(v) -> str:
    if isinstance(v, tuple):
        return ":".join(_vlabel(x) for x in v)
    return str(v)


def simplex_id(simplex: Sequence[Hashable]) -> str:
    return ",".join(_vlabel(v) for v in simplex)


def from_simplicial(facets: Sequence[Sequence[Hashable]], strata_of_vertex_set=None) -> StratifiedPoset:
    """Face poset of the simplicial complex generated by ``facets``.

    Vertices are ordered by Python ordering of their labels; a face dropping
    the i-th vertex has incidence sign (-1)^i.  One stratum ``top``.
    """
    if not facets:
        raise InvalidSpace("no facets")
    seen = set()
    simplices: dict[tuple, None] = {}
    for f in facets:
        if len(f) == 0:
            raise InvalidSpace("empty facet")
        t = tuple(sorted(f))
        if len(set(t)) != len(t):
            raise InvalidSpace(f"repeated vertex in facet {f}")
        if t in seen:
            raise InvalidSpace(f"duplicate facet {f}")
        seen.add(t)
        for k in range(1, len(t) + 1):
            for s in itertools.combinations(t, k):
                simplices[s] = None
    cells = {}
    verts = {}
    inc = []
    for s in simplices:
        cid = simplex_id(s)
        cells[cid] = len(s) - 1
        verts[cid] = s
        if len(s) > 1:
            for i in range(len(s)):
                inc.append((cid, simplex_id(s[:i] + s[i + 1:]), (-1) ** i))
    if len(cells) != len(simplices):
        raise InvalidSpace("vertex labels collide after string conversion")
    return StratifiedPoset(cells, inc, vertices=verts)


def simplicial_with_strata(facets, vertex_strata: Mapping[Hashable, str] | None, codims: Mapping[str, int]) -> StratifiedPoset:
    """Simplicial complex whose cell strata are given by a rule on vertex sets.

    A simplex belongs to the stratum of maximal codimension among those
    strata containing *all* its vertices, else to ``top``.  Intended for
    isolated singular vertices and the like.
    """
    P = from_simplicial(facets)
    vertex_strata = vertex_strata or {}
    assign = {}
    for cid, vs in P.vertices.items():
        names = {vertex_strata.get(v, TOP) for v in vs}
        assign[cid] = names.pop() if len(names) == 1 else TOP
    return assign_strata(P, assign, {TOP: 0, **codims})


def _simplicial_facets(P: StratifiedPoset) -> list[tuple]:
    if P.vertices is None:
        raise InvalidSpace("simplicial structure required")
    return [P.vertices[P.ids[i]] for i in range(P.n) if not P.cofaces[i]]


def cone_space(L: StratifiedPoset, apex_codim: int | None = None, apex="apex") -> StratifiedPoset:
    """Closed cone over a simplicial complex; the apex is the deepest stratum."""
    facets = _simplicial_facets(L)
    labels = {v for f in facets for v in f}
    if apex in labels:
        raise InvalidSpace("apex label collides with a vertex")
    # put the apex after all vertices in the vertex order: use a tuple key
    key = {v: (0, _vlabel(v)) for v in labels}
    key[apex] = (1, apex)
    new_facets = [tuple(f) + (apex,) for f in facets]
    order = lambda s: tuple(sorted(s, key=lambda v: key[v]))
    cone = _build_ordered([order(f) for f in new_facets])
    k = L.dim + 1 if apex_codim is None else apex_codim
    assign = {}
    for cid, vs in cone.vertices.items():
        base = tuple(v for v in vs if v != apex)
        if not base:
            assign[cid] = "apex"
        else:
            assign[cid] = L.stratum_of[L.index[simplex_id(base)]]
    codims = dict(L.strata)
    codims["apex"] = k
    return assign_strata(cone, assign, codims)


def _build_ordered(facets: Sequence[tuple]) -> StratifiedPoset:
    """Like from_simplicial but keeping the given vertex order inside each facet."""
    simplices: dict[tuple, None] = {}
    for t in facets:
        for k in range(1, len(t) + 1):
            for s in itertools.combinations(t, k):
                simplices[s] = None
    cells, verts, inc = {}, {}, []
    for s in simplices:
        cid = simplex_id(s)
        cells[cid] = len(s) - 1
        verts[cid] = s
        if len(s) > 1:
            for i in range(len(s)):
                inc.append((cid, simplex_id(s[:i] + s[i + 1:]), (-1) ** i))
    return StratifiedPoset(cells, inc, vertices=verts)


def suspension_space(L: StratifiedPoset, north="N", south="S") -> StratifiedPoset:
    """Suspension with the two cone points as separate strata of codim dim(L)+1."""
    facets = _simplicial_facets(L)
    labels = {v for f in facets for v in f}
    key = {v: (0, _vlabel(v)) for v in labels}
    key[north], key[south] = (1, north), (2, south)
    order = lambda s: tuple(sorted(s, key=lambda v: key[v]))
    fs = [order(tuple(f) + (north,)) for f in facets] + [order(tuple(f) + (south,)) for f in facets]
    P = _build_ordered(fs)
    assign = {}
    for cid, vs in P.vertices.items():
        if vs == (north,):
            assign[cid] = "north"
        elif vs == (south,):
            assign[cid] = "south"
        else:
            assign[cid] = TOP
    return assign_strata(P, assign, {TOP: 0, "north": L.dim + 1, "south": L.dim + 1})


def product_space(A: StratifiedPoset, B: StratifiedPoset) -> StratifiedPoset:
    """Staircase triangulation of A x B with product strata."""
    fa, fb = _simplicial_facets(A), _simplicial_facets(B)
    facets = []
    for a in fa:
        for b in fb:
            p, q = len(a) - 1, len(b) - 1
            # lattice paths from (0,0) to (p,q)
            for steps in itertools.combinations(range(p + q), p):
                i = j = 0
                path = [(a[0], b[0])]
                st = set(steps)
                for t in range(p + q):
                    if t in st:
                        i += 1
                    else:
                        j += 1
                    path.append((a[i], b[j]))
                facets.append(tuple(path))
    # vertex order: lexicographic on (order in A, order in B), consistent with paths
    ka, kb = vertex_order(A), vertex_order(B)
    order = lambda s: tuple(sorted(set(s), key=lambda v: (ka[v[0]], kb[v[1]])))
    uniq = sorted({order(f) for f in facets}, key=lambda s: [(ka[v[0]], kb[v[1]]) for v in s])
    P = _build_ordered(uniq)
    la = {frozenset(vs): i for i, vs in ((A.index[c], v) for c, v in A.vertices.items())}
    lb = {frozenset(vs): i for i, vs in ((B.index[c], v) for c, v in B.vertices.items())}
    assign, codims = {}, {}
    for cid, vs in P.vertices.items():
        sa = A.stratum_of[la[frozenset(v[0] for v in vs)]]
        sb = B.stratum_of[lb[frozenset(v[1] for v in vs)]]
        name = TOP if sa == TOP and sb == TOP else f"{sa}x{sb}"
        assign[cid] = name
        codims[name] = A.strata[sa] + B.strata[sb]
    return assign_strata(P, assign, codims)


def vertex_order(P: StratifiedPoset) -> dict:
    """Rank of each vertex in a total order compatible with every stored simplex."""
    ts = graphlib.TopologicalSorter()
    for i in range(P.n):
        vs = P.vertices[P.ids[i]]
        if len(vs) == 1:
            ts.add(vs[0])
        elif len(vs) == 2:
            ts.add(vs[1], vs[0])
    return {v: n for n, v in enumerate(ts.static_order())}


def _sort_key(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, _vlabel(v))


def point_space() -> StratifiedPoset:
    return from_simplicial([[0]])


def boundary_simplex(n: int) -> StratifiedPoset:
    """Boundary of the n-simplex on vertices 0..n."""
    return from_simplicial([tuple(v for v in range(n + 1) if v != i) for i in range(n + 1)])


def cycle_space(m: int = 3) -> StratifiedPoset:
    return from_simplicial([(i, (i + 1) % m) for i in range(m)])
