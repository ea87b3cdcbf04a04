"""Perversities, axiom checks and the stratum-by-stratum IC / IS constructions.

All complexes produced here are injective generator complexes (see
:mod:`intspace.functors`): pushforward along an open inclusion keeps the
generators, global sections are read off the coefficient matrices, and the
cone of a map between two such complexes is again one.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import exactla as la
from .exactla import RatMatrix
from .functors import (GeneratorComplex, HomComplex, InjectiveModel, _sorted_gens, derived_pushforward_open,
                       hom_from_projective, hom_into_injective, injective_map_coefficients, injective_model,
                       postcompose, precompose, projective_model)
from .sheafcx import (CellView, InvariantViolation, SheafComplex, SheafMorphism, _stalk_cohomology, cohomology_sheaf,
                      constant_sheaf, induced_stalk_map, is_constant_rank_one, stalk_betti, truncate)
from .stratspace import StratifiedPoset


class ObstructionNonzero(Exception):
    """The truncation triangle at a stratum does not split."""

    def __init__(self, codim: int, qbar: int, ext1_dim: int, splitting=None):
        self.codim, self.qbar, self.ext1_dim, self.splitting = codim, qbar, ext1_dim, splitting
        super().__init__(f"truncation triangle at codimension {codim} (qbar={qbar}) does not split; "
                         f"dim Ext^1 = {ext1_dim}")


# -- perversities -------------------------------------------------------------

class Perversity:
    """Map k -> p(k) on codimensions 2..d_max with p(2) = 0 and steps 0 or 1."""

    def __init__(self, values: Mapping[int, int], name: str | None = None):
        self.values = {int(k): int(v) for k, v in sorted(values.items())}
        self.name = name
        self.validate()

    def validate(self):
        ks = sorted(self.values)
        if not ks or ks[0] != 2 or ks != list(range(2, ks[-1] + 1)):
            raise ValueError("perversity must be defined on 2..d_max")
        if self.values[2] != 0:
            raise ValueError("p(2) must be 0")
        for k in ks[:-1]:
            step = self.values[k + 1] - self.values[k]
            if step not in (0, 1):
                raise ValueError(f"p({k + 1}) - p({k}) = {step} is not 0 or 1")

    @property
    def d_max(self):
        return max(self.values)

    def __call__(self, k: int) -> int:
        if k not in self.values:
            raise KeyError(f"perversity undefined at codimension {k}")
        return self.values[k]

    def __eq__(self, other):
        return isinstance(other, Perversity) and self.values == other.values

    def __hash__(self):
        return hash(tuple(self.values.items()))

    def __repr__(self):
        body = ",".join(f"{k}:{v}" for k, v in self.values.items())
        return f"Perversity({self.name or body})"

    def to_json(self):
        return {"name": self.name, "values": {str(k): v for k, v in self.values.items()}}


_NAMED = {
    "zero": lambda k: 0,
    "total": lambda k: k - 2,
    "lower-middle": lambda k: k // 2 - 1,
    "upper-middle": lambda k: (k - 1) // 2,
}


def standard_perversity(name: str, d_max: int) -> Perversity:
    if d_max < 2:
        raise ValueError("d_max must be at least 2")
    if name not in _NAMED:
        raise ValueError(f"unknown perversity {name!r}; expected one of {sorted(_NAMED)}")
    return Perversity({k: _NAMED[name](k) for k in range(2, d_max + 1)}, name)


def complement(p: Perversity) -> Perversity:
    names = {"zero": "total", "total": "zero", "lower-middle": "upper-middle", "upper-middle": "lower-middle"}
    return Perversity({k: k - 2 - v for k, v in p.values.items()}, names.get(p.name))


def parse_perversity(text: str, d_max: int) -> Perversity:
    """A standard name, or explicit values 'k:v,k:v'."""
    if ":" not in text:
        return standard_perversity(text, max(d_max, 2))
    vals = {}
    for part in text.split(","):
        k, v = part.split(":")
        vals[int(k)] = int(v)
    return Perversity(vals)


# -- splitting data ---------------------------------------------------------

@dataclass
class SplittingData:
    """The truncation triangle A -f-> B -g-> C of B at qbar and its splitting.

    A retraction is a degree-0 cocycle of Hom(B, I(A)); ``retraction_base`` is
    one with f^* lambda - psi_A = D(homotopy), and ``linear_part`` lists
    cocycles spanning all other choices modulo coboundaries.
    """
    B: SheafComplex
    qbar: int
    A: SheafComplex
    C: SheafComplex
    f: SheafMorphism
    g: SheafMorphism
    IA: InjectiveModel
    hom: HomComplex                      # Hom(B, I(A))
    split: bool
    retraction_base: RatMatrix | None
    homotopy: RatMatrix | None
    linear_part: list
    ext1_dim: int
    conditions: dict = field(default_factory=dict)
    hom_CA_dim: int | None = None

    @property
    def linear_part_dim(self) -> int:
        return len(self.linear_part)

    def retraction(self, coords: Sequence = ()) -> RatMatrix:
        if not self.split:
            raise ObstructionNonzero(-1, self.qbar, self.ext1_dim, self)
        if len(coords) != len(self.linear_part):
            raise ValueError(f"expected {len(self.linear_part)} coordinates, got {len(coords)}")
        lam = self.retraction_base
        for c, mu in zip(coords, self.linear_part):
            if c:
                lam = lam + la.scalar_mul(c, mu)
        return lam

    def is_retraction(self, lam: RatMatrix) -> bool:
        """Exact check that lam is a cocycle and lam o f is homotopic to psi_A."""
        HA = hom_into_injective(self.A, self.IA.model)
        if self.hom.dim(1) and not la.is_zero(self.hom.d(0) * lam):
            return False
        diff = precompose(self.hom, HA, self.f, 0) * lam - HA.vector_from(0, self.IA.psi)
        return HA.is_coboundary(0, diff)

    def to_json(self):
        return {
            "qbar": self.qbar,
            "split": self.split,
            "ext1_dim": self.ext1_dim,
            "linear_part_dim": self.linear_part_dim,
            "conditions": dict(self.conditions),
        }


def _solve_class(dZ: RatMatrix, T: RatMatrix, dT: RatMatrix, target: RatMatrix):
    """Find a cocycle x (dZ x = 0) and y with T x + dT y = target.

    Returns (x, y, kernel-x-part) or (None, None, kernel-x-part)."""
    nx, ny = T.ncols(), dT.ncols()
    top = la.hstack([dZ, la.zeros(dZ.nrows(), ny)], nrows=dZ.nrows()) if dZ.nrows() else la.zeros(0, nx + ny)
    bot = la.hstack([T, dT], nrows=T.nrows())
    M = la.vstack([top, bot], ncols=nx + ny)
    rhs = la.vstack([la.zeros(top.nrows(), 1), target], ncols=1)
    x, K = la.solve_affine(M, rhs)
    Kx = la.submatrix(K, list(range(nx)), list(range(K.ncols()))) if K.ncols() else la.zeros(nx, 0)
    if x is None:
        return None, None, Kx
    return (la.submatrix(x, list(range(nx)), [0]), la.submatrix(x, list(range(nx, nx + ny)), [0]), Kx)


def splitting_data(B: SheafComplex, qbar: int, conditions: bool = True) -> SplittingData:
    """Decide whether tau<=qbar B -> B -> tau>qbar B splits, with retractions.

    With ``conditions`` the four equivalent conditions of the split-triangle
    criterion are computed by separate routes and stored in ``conditions``:
    retraction (Hom into an injective model of A), section (Hom out of a
    projective model of C), decomposition (an explicit A + C -> B checked to
    be a quasi-isomorphism) and connecting (the Ext^1 class of the triangle).
    """
    A, f = truncate(B, qbar, "le")
    C, g = truncate(B, qbar, "gt")
    IA = injective_model(A)
    HB = hom_into_injective(B, IA.model)
    HA = hom_into_injective(A, IA.model)
    Fs = precompose(HB, HA, f, 0)
    psiA = HA.vector_from(0, IA.psi)
    lam, h, Kx = _solve_class(HB.d(0), Fs, HA.d(-1), psiA)
    split = lam is not None
    lin = []
    if split and Kx.ncols():
        bnd = HB.d(-1)
        for j in la.complement_columns(bnd, Kx):
            lin.append(la.column(Kx, j))
    homotopy = la.scalar_mul(-1, h) if split else None
    sd = SplittingData(B, qbar, A, C, f, g, IA, HB, split, lam, homotopy, lin, 0)
    PC = projective_model(C)
    HPA = hom_from_projective(PC.model, A)
    sd.ext1_dim = HPA.betti().get(1, 0)
    if conditions:
        sd.conditions = _lemma_conditions(sd, PC, HPA)
        sd.hom_CA_dim = hom_into_injective(C, IA.model).betti().get(0, 0)
    return sd


def _lemma_conditions(sd: SplittingData, PC, HPA: HomComplex) -> dict:
    B, A, C, f, g = sd.B, sd.A, sd.C, sd.f, sd.g
    HPB = hom_from_projective(PC.model, B)
    HPC = hom_from_projective(PC.model, C)
    # (2) a section of g
    Gs = postcompose(HPB, HPC, g, 0)
    phiC = HPC.vector_from(0, PC.phi)
    sigma, _, _ = _solve_class(HPB.d(0), Gs, HPC.d(-1), phiC)
    section = sigma is not None
    # (3) gamma' = (f o phi_A, sigma): P(A) + P(C) -> B is a quasi-isomorphism
    decomposition = False
    if section:
        PA = projective_model(A)
        mA = PA.morphism().then(f)
        mC = HPB.to_morphism(0, sigma) if HPB.dim(0) else None
        decomposition = True
        degs = sorted(set(B.degrees) | set(A.degrees) | set(C.degrees))
        for x in B.cells:
            for n in degs:
                parts = [induced_stalk_map(mA, n, x)]
                if mC is not None:
                    parts.append(induced_stalk_map(mC, n, x))
                rows = max(p.nrows() for p in parts)
                M = la.hstack([p for p in parts if p.nrows() == rows], nrows=rows)
                if M.nrows() != M.ncols() or la.rank(M) != M.nrows():
                    decomposition = False
                    break
            if not decomposition:
                break
    # (4) the connecting class C -> A[1] vanishes
    w = la.zeros(HPB.dim(0), 1)
    for (n, a, k) in HPB.blocks.get(0, ()):
        s = PC.model.gens[n][a]
        v = PC.phi.get(n, {}).get(a)
        if v is None or not C.dim(n, s):
            continue
        x = la.solve(g.comp(n, s), v)
        if x is None:
            raise InvariantViolation("projection to tau> is not surjective on a stalk")
        o = HPB.offsets[(0, n, a)]
        for r in range(k):
            w[o + r, 0] = x[r, 0]
    y = HPB.d(0) * w if HPB.dim(1) else la.zeros(0, 1)
    z = la.zeros(HPA.dim(1), 1)
    for (n, a, k) in HPA.blocks.get(1, ()):
        s = PC.model.gens[n][a]
        if (1, n, a) not in HPB.offsets:
            continue
        o = HPB.offsets[(1, n, a)]
        yb = la.submatrix(y, list(range(o, o + B.dim(n + 1, s))), [0])
        zb = la.solve(f.comp(n + 1, s), yb)
        if zb is None:
            raise InvariantViolation("connecting cochain does not lie in tau<=")
        o2 = HPA.offsets[(1, n, a)]
        for r in range(k):
            z[o2 + r, 0] = zb[r, 0]
    if HPA.dim(2) and not la.is_zero(HPA.d(1) * z):
        raise InvariantViolation("connecting cochain is not a cocycle")
    connecting = HPA.is_coboundary(1, z)
    return {"retraction": sd.split, "section": section, "decomposition": decomposition, "connecting_zero": connecting}


# -- axiom checks ---------------------------------------------------------------

@dataclass
class AxiomReport:
    variant: str
    results: list        # (axiom, codim, degree, passed, detail)

    @property
    def passed(self) -> bool:
        return all(r[3] for r in self.results)

    def failures(self):
        return [r for r in self.results if not r[3]]

    def to_json(self):
        return {"variant": self.variant, "passed": self.passed,
                "results": [{"axiom": a, "codim": k, "degree": n, "passed": ok, "detail": d}
                            for a, k, n, ok, d in self.results]}


def _unit_maps(K, X: StratifiedPoset, k: int):
    """For t in the codim-k stratum: stalk maps K(t) -> (i_* K|U_k)(t) per degree."""
    U_k = set(X.open_complement(k).members)
    U_k1 = X.open_complement(k + 1).members
    S = X.stratum_cells(k).members
    if getattr(K, "kind", None) == "inj":
        T = K.restrict(U_k).on_domain(U_k1)
        out = {}
        for t in S:
            for n in K.degrees:
                src, tgt = K.stalk_index(n, t), T.stalk_index(n, t)
                # T keeps the generators of K at cells of U_k, in order
                kmap = [a for a, c in enumerate(K.gens[n]) if c in U_k]
                pos = {a: r for r, a in enumerate(src)}
                M = la.zeros(len(tgt), len(src))
                for r, b in enumerate(tgt):
                    M[r, pos[kmap[b]]] = 1
                out[(n, t)] = M
        return T, out
    view = CellView(K, U_k1).concrete()
    Ksub = CellView(K, sorted(U_k)).concrete()
    push = derived_pushforward_open(Ksub, U_k1)
    u = push.unit(view)
    return push.complex, {(n, t): u.comp(n, t) for t in S for n in K.degrees}


def check_axioms(K, X: StratifiedPoset, p: Perversity, variant: str = "IS") -> AxiomReport:
    """[AX1]_k (variant 'IC') or [AXS1]_k (variant 'IS') for every singular codimension."""
    if variant not in ("IC", "IS"):
        raise ValueError("variant must be 'IC' or 'IS'")
    if set(K.cells) != set(range(X.n)):
        raise ValueError("complex is not defined on all of X")
    q = complement(p)
    if getattr(K, "kind", None) != "inj" and (len(K.cells) > 40 or sum(K.total_dim(n) for n in K.degrees) > 200):
        # the unit comparison is invariant under the quasi-isomorphism K -> I(K)
        K = injective_model(K).model
    res = []
    U2 = X.open_complement(2).members
    V = CellView(K, U2)
    H0 = cohomology_sheaf(V, 0)
    ok = is_constant_rank_one(H0)
    res.append(("a", 0, 0, ok, "H^0 on U_2 constant of rank one" if ok else "H^0 on U_2 not constant rank one"))
    others = sorted({n for i in U2 for n in stalk_betti(V, i)} - {0})
    res.append(("a", 0, None, not others, f"other cohomology on U_2 in degrees {others}" if others else "ok"))
    bad = sorted({n for i in K.cells for n in stalk_betti(K, i) if n < 0 or n > X.dim})
    res.append(("b", 0, None, not bad, f"cohomology in degrees {bad}" if bad else "ok"))
    for k in X.singular_codims():
        S = X.stratum_cells(k).members
        if not S:
            continue
        thr = q(k) if variant == "IS" else p(k)
        degs = sorted({n for t in S for n in stalk_betti(K, t)})
        for n in degs:
            vanish_required = n <= thr if variant == "IS" else n > thr
            if vanish_required:
                cells = [X.ids[t] for t in S if stalk_betti(K, t).get(n, 0)]
                res.append(("c", k, n, not cells, f"nonzero at {cells[:3]}" if cells else "ok"))
        T, maps = _unit_maps(K, X, k)
        for n in sorted(set(K.degrees) | set(T.degrees)):
            iso_required = n > thr if variant == "IS" else n <= thr
            if not iso_required:
                continue
            bad_cells = []
            for t in S:
                zs, _ = _stalk_cohomology(K, n, t)
                zt, bt = _stalk_cohomology(T, n, t)
                M = maps.get((n, t))
                if M is None or not zs.ncols() or not zt.ncols():
                    ind = la.zeros(zt.ncols(), zs.ncols())
                else:
                    ind = la.coords_modulo(zt, bt, M * zs)
                if ind.nrows() != ind.ncols() or la.rank(ind) != ind.nrows():
                    bad_cells.append(X.ids[t])
            res.append(("d", k, n, not bad_cells, f"not an isomorphism at {bad_cells[:3]}" if bad_cells else "ok"))
    return AxiomReport(variant, res)


# -- tower construction --------------------------------------------------------

@dataclass
class StepRecord:
    codim: int
    threshold: int                 # qbar(r) for IS, pbar(r) for IC
    splitting: SplittingData | None
    coords: tuple
    complex: GeneratorComplex | None       # the new complex on U_{r+1}
    J: GeneratorComplex | None = None      # i_* of the previous complex
    T: GeneratorComplex | None = None      # injective model of the truncation, on U_{r+1}
    phi_parts: list = field(default_factory=list)   # coefficient matrices of phi for the base and each mu_i
    IB: GeneratorComplex | None = None     # minimal injective model of B on the stratum
    lam_parts: list = field(default_factory=list)   # coefficient matrices IB -> I(A) of lambda_0 and each mu_i

    @staticmethod
    def _combine(parts, coords):
        out = {n: m for n, m in parts[0].items()}
        for c, part in zip(coords, parts[1:]):
            if c:
                for n, m in part.items():
                    out[n] = out[n] + la.scalar_mul(c, m)
        return out

    def lam(self, coords=None) -> dict[int, RatMatrix]:
        return self._combine(self.lam_parts, self.coords if coords is None else coords)

    def phi(self, coords=None) -> dict[int, RatMatrix]:
        return self._combine(self.phi_parts, self.coords if coords is None else coords)

    def to_json(self):
        out = {"codim": self.codim, "threshold": self.threshold, "coords": [int(c) for c in self.coords]}
        if self.splitting is not None:
            out.update(self.splitting.to_json())
        return out


@dataclass
class ISTower:
    space: object
    perversity: Perversity
    variant: str
    steps: list
    complex: GeneratorComplex | None
    seed: int | None = None

    @property
    def complete(self) -> bool:
        return self.complex is not None

    def betti(self) -> dict[int, int]:
        if self.complex is None:
            raise ValueError("no total complex for a stratum-model space")
        return self.complex.gamma_betti()

    def to_json(self):
        out = {"variant": self.variant, "perversity": self.perversity.to_json(), "seed": self.seed,
               "strata": [s.to_json() for s in self.steps]}
        if self.complex is not None:
            out["betti"] = {str(n): v for n, v in sorted(self.betti().items())}
        return out


def _as_injective(K) -> GeneratorComplex:
    if isinstance(K, GeneratorComplex) and K.kind == "inj":
        return K
    return injective_model(K).model


def _cocone(J: GeneratorComplex, T: GeneratorComplex, Phi: Mapping[int, RatMatrix], cells) -> GeneratorComplex:
    """Generator complex of cone(Phi: J -> T)[-1]: degree n is J^n + T^{n-1}."""
    degs = sorted(set(J.gens) | {n + 1 for n in T.gens})
    raw, lab = {}, {}
    for n in degs:
        items = [(c, 0, a) for a, c in enumerate(J.gens.get(n, ()))] + [(c, 1, b) for b, c in enumerate(T.gens.get(n - 1, ()))]
        items.sort()
        raw[n] = [c for c, _, _ in items]
        lab[n] = {(w, a): r for r, (_, w, a) in enumerate(items)}
    D = {}
    for n in degs:
        if n + 1 not in raw:
            continue
        M = la.zeros(len(raw[n + 1]), len(raw[n]))
        rows, cols = lab[n + 1], lab[n]
        if n in J.D:
            for r, row in enumerate(la.to_rows(J.D[n])):
                for a, e in enumerate(row):
                    if e != 0:
                        M[rows[(0, r)], cols[(0, a)]] = e
        if n in Phi:
            for r, row in enumerate(la.to_rows(Phi[n])):
                for a, e in enumerate(row):
                    if e != 0:
                        M[rows[(1, r)], cols[(0, a)]] = -e
        if n - 1 in T.D:
            for r, row in enumerate(la.to_rows(T.D[n - 1])):
                for b, e in enumerate(row):
                    if e != 0:
                        M[rows[(1, r)], cols[(1, b)]] = -e
        D[n] = M
    return GeneratorComplex(J.poset, cells, "inj", raw, D, check=False)


def _functionals(hom_vec: RatMatrix, H: HomComplex, T: GeneratorComplex, psiB: SheafMorphism) -> dict:
    """Per generator of T: (block of hom_vec) o psiB, a functional on the J-stalk.

    Without psiB the functional stays on the stalk of the minimal model of B."""
    funcs = {}
    for n, cs in T.gens.items():
        for g, t in enumerate(cs):
            key = (0, n, g)
            if key not in H.offsets:
                continue
            o = H.offsets[key]
            k = H.src.dim(n, t)
            row = la.mat([[hom_vec[o + r, 0] for r in range(k)]], k)
            funcs.setdefault(n, {})[g] = row * psiB.comp(n, t) if psiB is not None else row
    return funcs


def _stratum_data(prev: GeneratorComplex, X: StratifiedPoset, r: int):
    U_next = X.open_complement(r + 1).members
    S = X.stratum_cells(r).members
    J = prev.on_domain(U_next)
    B0 = CellView(J, S).concrete()
    IB = injective_model(B0)
    Bc = IB.model.to_complex()
    return J, B0, IB, Bc, U_next


def _choose_coords(sd: SplittingData, choice, rng: random.Random | None):
    n = sd.linear_part_dim
    if choice is None or choice == "generic":
        rng = rng or random.Random(0)
        return tuple(rng.randint(-10, 10) for _ in range(n))
    coords = tuple(int(c) if float(c).is_integer() else c for c in choice)
    if len(coords) != n:
        raise ValueError(f"stratum needs {n} retraction coordinates, got {len(coords)}")
    return coords


def build_is_step(prev, X: StratifiedPoset, p: Perversity, r: int, choice=None, rng=None,
                  conditions: bool = False) -> StepRecord:
    """IS_r on U_{r+1} from IS_{r-1} on U_r (as an injective complex or any sheaf complex)."""
    q = complement(p)
    prev = _as_injective(prev)
    if not X.stratum_cells(r).members:
        U_next = X.open_complement(r + 1).members
        return StepRecord(r, q(r), None, (), prev.on_domain(U_next))
    J, B0, IB, Bc, U_next = _stratum_data(prev, X, r)
    sd = splitting_data(Bc, q(r), conditions=conditions)
    if not sd.split:
        raise ObstructionNonzero(r, q(r), sd.ext1_dim, sd)
    coords = _choose_coords(sd, choice, rng)
    T = sd.IA.model.on_domain(U_next)
    psiB = IB.morphism()
    vecs = [sd.retraction_base] + sd.linear_part
    parts = [injective_map_coefficients(J, T, _functionals(v, sd.hom, T, psiB)) for v in vecs]
    lam_parts = [injective_map_coefficients(IB.model, sd.IA.model, _functionals(v, sd.hom, sd.IA.model, None))
                 for v in vecs]
    rec = StepRecord(r, q(r), sd, coords, None, J, T, parts, IB.model, lam_parts)
    rec.complex = _cocone(J, T, rec.phi(), U_next)
    return rec


def build_ic_step(prev, X: StratifiedPoset, p: Perversity, r: int) -> StepRecord:
    prev = _as_injective(prev)
    U_next = X.open_complement(r + 1).members
    if not X.stratum_cells(r).members:
        return StepRecord(r, p(r), None, (), prev.on_domain(U_next))
    J, B0, IB, Bc, U_next = _stratum_data(prev, X, r)
    C, g = truncate(Bc, p(r), "gt")
    IC = injective_model(C)
    T = IC.model.on_domain(U_next)
    psiB = IB.morphism()
    funcs = {}
    for n, cs in IC.model.gens.items():
        for a, t in enumerate(cs):
            funcs.setdefault(n, {})[a] = IC.psi[n][a] * g.comp(n, t) * psiB.comp(n, t)
    Phi = injective_map_coefficients(J, T, funcs)
    return StepRecord(r, p(r), None, (), _cocone(J, T, Phi, U_next), J, T, [Phi])


def _base_complex(X: StratifiedPoset) -> GeneratorComplex:
    U2 = X.open_complement(2).members
    return injective_model(constant_sheaf(X, 0, U2)).model


def build_ic(X: StratifiedPoset, p: Perversity) -> GeneratorComplex:
    """Deligne-style IC complex (degrees 0..d, [AX1]_k normalization) as an injective complex."""
    K = _base_complex(X)
    for r in range(2, X.dim + 1):
        K = build_ic_step(K, X, p, r).complex
    return K


def build_is(X, p: Perversity, choices=None, seed: int = 0, conditions: bool = False) -> ISTower:
    """Fold build_is_step over the singular codimensions.

    ``choices`` maps codimension -> coordinate tuple; missing strata get
    generic integer coordinates in [-10, 10] drawn from ``seed``.  For a
    stratum-model space only the splitting is decided (no total complex).
    """
    choices = choices or {}
    rng = random.Random(seed)
    if hasattr(X, "model") and hasattr(X, "stratum"):
        q = complement(p)
        sd = splitting_data(X.model, q(X.codim), conditions=conditions)
        if not sd.split:
            raise ObstructionNonzero(X.codim, q(X.codim), sd.ext1_dim, sd)
        coords = _choose_coords(sd, choices.get(X.codim), rng)
        return ISTower(X, p, "IS", [StepRecord(X.codim, q(X.codim), sd, coords, None)], None, seed)
    K = _base_complex(X)
    steps = []
    for r in range(2, X.dim + 1):
        if not X.stratum_cells(r).members:
            K = K.on_domain(X.open_complement(r + 1).members)
            continue
        rec = build_is_step(K, X, p, r, choices.get(r), rng, conditions)
        steps.append(rec)
        K = rec.complex
    return ISTower(X, p, "IS", steps, K, seed)
