"""Random fixtures shared by the property tests."""
import random

from intspace import exactla as la
from intspace.sheafcx import SheafComplex, cone, direct_sum, SheafMorphism


def random_invertible(n, rng):
    while True:
        m = la.mat([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])
        if la.rank(m) == n:
            return m


def gauge(K, rng):
    """Isomorphic copy of K with random stalk bases."""
    g = {n: {i: random_invertible(K.dim(n, i), rng) for i in K.cells if K.dim(n, i)} for n in K.degrees}
    res = {n: {(i, j): g[n][j] * K.res_cover(n, i, j) * g[n][i].inv()
               for i, j in K.cover_pairs() if K.dim(n, i) and K.dim(n, j)} for n in K.degrees}
    d = {n: {i: g[n + 1][i] * K.diff(n, i) * g[n][i].inv() for i in K.cells
             if K.dim(n, i) and K.dim(n + 1, i)} for n in K.degrees if n + 1 in K.degrees}
    return SheafComplex(K.poset, K.cells, K.dims, res, d)


def extension_by_zero(P, cells, support, degree=0):
    """Rank one on a locally closed ``support``, identity between support cells."""
    one = la.identity(1)
    sup = set(support)
    res = {(i, j): one for i in sup for j, _ in P.cofaces[i] if j in sup and j in set(cells)}
    return SheafComplex(P, cells, {degree: {i: 1 for i in sup}}, {degree: res})


def random_sheaf_complex(P, rng, max_summands=3, degrees=(0, 1, 2)):
    cells = list(range(P.n))
    parts = []
    for _ in range(rng.randint(1, max_summands)):
        kind = rng.choice(["open", "closed", "all"])
        seed = rng.randrange(P.n)
        if kind == "open":
            sup = P.above(seed)
        elif kind == "closed":
            sup = P.below(seed)
        else:
            sup = range(P.n)
        parts.append(extension_by_zero(P, cells, sup, rng.choice(degrees)))
    if rng.random() < 0.5:
        # a two-term complex c: Q -> Q shifted, acyclic iff c != 0
        A = extension_by_zero(P, cells, range(P.n), 0)
        B = extension_by_zero(P, cells, range(P.n), 0)
        c = rng.choice([0, 1, -3])
        f = SheafMorphism(A, B, {0: {i: la.scalar_mul(c, la.identity(1)) for i in cells}})
        parts.append(cone(f).cone.shift(-rng.choice([0, 1])))
    return gauge(direct_sum(*parts), rng)


def random_graph(rng, nv=5):
    edges = set()
    for _ in range(rng.randint(1, 2 * nv)):
        a, b = rng.sample(range(nv), 2)
        edges.add((min(a, b), max(a, b)))
    from intspace.stratspace import from_simplicial
    return from_simplicial(sorted(edges))


def local_system(P, rng, degree=0, cells=None):
    """Rank one, random nonzero scalars on covering pairs; only functorial on posets of height <= 1."""
    cells = list(range(P.n)) if cells is None else list(cells)
    cs = set(cells)
    res = {(i, j): la.mat([[rng.choice([1, -1, 2, -2])]]) for i in cells for j, _ in P.cofaces[i] if j in cs}
    return SheafComplex(P, cells, {degree: {i: 1 for i in cells}}, {degree: res})


def random_graph_model(rng):
    P = random_graph(rng)
    parts = [local_system(P, rng, rng.randint(0, 3)) for _ in range(rng.randint(1, 4))]
    return gauge(direct_sum(*parts), rng)


def random_split_degrees(rng, top=4):
    return sorted(rng.choice(range(top)) for _ in range(rng.randint(1, 4)))


def random_lemma_fixture(rng):
    """(B, qbar) pairs, split and non-split: Euler-class models with random scalars, sums, graph systems."""
    from intspace.models_io import generator_cocycle, sphere_2, sphere_bundle_pushforward, BundleModelSpec
    kind = rng.choice(["bundle", "bundle_sum", "graph", "random"])
    S = sphere_2()
    if kind == "graph":
        return random_graph_model(rng), rng.randint(0, 2)
    if kind == "random":
        return random_sheaf_complex(S, rng), rng.randint(0, 2)
    c = rng.choice([0, 1, -1, 2, 3])
    cid, = generator_cocycle(S, 2)
    K = sphere_bundle_pushforward(BundleModelSpec(S, 1, {cid: c} if c else {}))
    if kind == "bundle_sum":
        K = direct_sum(K, random_sheaf_complex(S, rng, max_summands=1))
    return gauge(K, rng), rng.choice([0, 0, 1])
