"""Betti profiles of IS towers, generic Betti numbers and the duality check."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from . import exactla as la
from .istower import ISTower, Perversity, StepRecord, build_is, complement


class MinimumUnstable(RuntimeError):
    pass


@dataclass
class BettiProfile:
    dims: dict
    alpha_ranks: dict = field(default_factory=dict)
    sample_id: dict = field(default_factory=dict)

    def vector(self, d: int) -> tuple:
        return tuple(self.dims.get(n, 0) for n in range(d + 1))

    def to_json(self):
        return {"dims": {str(n): v for n, v in sorted(self.dims.items())},
                "alpha_ranks": {str(n): v for n, v in sorted(self.alpha_ranks.items())},
                "sample": self.sample_id}


def induced_ranks(src, tgt, maps: dict) -> dict[int, int]:
    """Rank of H^n(Gamma src) -> H^n(Gamma tgt) for coefficient matrices maps[n]."""
    _, _, mats = _affine_parts(src, tgt, [maps])
    return {n: la.rank(m) for n, m in mats[0].items()}


def _affine_parts(src, tgt, parts) -> tuple[dict, dict, list]:
    """Cohomology dims of Gamma(src), Gamma(tgt) and, per part, the induced map in cohomology bases."""
    degs = sorted(set(src.gens) | set(tgt.gens))
    rs, rt = {}, {}
    for n in degs:
        rs[n] = src.gamma_cohomology(n)[0] if n in src.gens else la.zeros(0, 0)
        rt[n] = tgt.gamma_cohomology(n) if n in tgt.gens else (la.zeros(0, 0), la.zeros(0, 0))
    hs = {n: rs[n].ncols() for n in degs if rs[n].ncols()}
    ht = {n: rt[n][0].ncols() for n in degs if rt[n][0].ncols()}
    mats = []
    for part in parts:
        m = {}
        for n in degs:
            if n in hs and n in ht and n in part:
                reps, bnd = rt[n]
                m[n] = la.coords_modulo(reps, bnd, part[n] * rs[n])
        mats.append(m)
    return hs, ht, mats


def _combine(mats, coords) -> dict:
    out = dict(mats[0])
    for c, m in zip(coords, mats[1:]):
        if c:
            for n, x in m.items():
                out[n] = out[n] + la.scalar_mul(c, x)
    return out


class _StepAlgebra:
    """Global-section data of a depth-one step, affine in the retraction coordinates."""

    def __init__(self, step: StepRecord):
        self.step = step
        self.hJ, self.hT, self.alpha = _affine_parts(step.J, step.T, step.phi_parts)
        self.hB, self.hA, self.lam = _affine_parts(step.IB, step.splitting.IA.model, step.lam_parts)

    def alpha_ranks(self, coords) -> dict[int, int]:
        return {n: la.rank(m) for n, m in _combine(self.alpha, coords).items()}

    def kernel_lambda(self, coords) -> dict[int, int]:
        ranks = {n: la.rank(m) for n, m in _combine(self.lam, coords).items()}
        return {n: h - ranks.get(n, 0) for n, h in self.hB.items()}

    def profile(self, coords) -> tuple[dict, dict]:
        ranks = self.alpha_ranks(coords)
        degs = set(self.hJ) | {n + 1 for n in self.hT}
        dims = {}
        for n in sorted(degs):
            ker = self.hJ.get(n, 0) - ranks.get(n, 0)
            cok = self.hT.get(n - 1, 0) - ranks.get(n - 1, 0)
            if ker + cok:
                dims[n] = ker + cok
        return dims, ranks


def _depth_one_step(tower: ISTower) -> StepRecord | None:
    steps = [s for s in tower.steps if s.splitting is not None]
    if len(steps) > 1:
        raise ValueError("depth-one stratification required")
    return steps[0] if steps else None


def hyper_betti(tower: ISTower) -> BettiProfile:
    """Exact hypercohomology; for depth one also the alpha ranks, checked against the dimensions."""
    if not tower.complete:
        raise ValueError("incomplete tower: no total complex")
    dims = tower.betti()
    sid = {"seed": tower.seed, "coords": [list(map(int, s.coords)) for s in tower.steps]}
    steps = [s for s in tower.steps if s.splitting is not None]
    if len(steps) != 1:
        return BettiProfile(dims, {}, sid)
    alg = _StepAlgebra(steps[0])
    pred, ranks = alg.profile(steps[0].coords)
    if pred != dims:
        raise AssertionError(f"ker/coker decomposition {pred} disagrees with hypercohomology {dims}")
    return BettiProfile(dims, ranks, sid)


def sample_coords(n: int, samples: int, seed: int) -> list[tuple]:
    rng = random.Random(seed)
    return [tuple(rng.randint(-10, 10) for _ in range(n)) for _ in range(samples)]


@dataclass
class GenericResult:
    profile: BettiProfile
    samples: list            # (coords, dims, alpha ranks)
    attained_by: int
    kernel_lambda: dict      # n -> dim ker lambda^n (sample independent)

    def to_json(self):
        out = self.profile.to_json()
        out["attained_by"] = self.attained_by
        out["samples"] = len(self.samples)
        return out


def _minimum(profiles):
    degs = sorted({n for p in profiles for n in p})
    return {n: min(p.get(n, 0) for p in profiles) for n in degs if min(p.get(n, 0) for p in profiles)}


def generic_betti(X, p: Perversity, samples: int = 20, seed: int = 0, tower: ISTower | None = None) -> GenericResult:
    """Coordinatewise-minimal Betti profile over seeded integer retraction samples."""
    tower = tower or build_is(X, p, seed=seed)
    step = _depth_one_step(tower)
    if step is None or step.splitting.linear_part_dim == 0:
        prof = hyper_betti(tower)
        prof.sample_id["unique"] = True
        return GenericResult(prof, [((), prof.dims, prof.alpha_ranks)], samples, {})
    alg = _StepAlgebra(step)
    rows, klam = [], None
    for c in sample_coords(step.splitting.linear_part_dim, samples, seed):
        dims, ranks = alg.profile(c)
        rows.append((c, dims, ranks))
        kl = alg.kernel_lambda(c)
        if klam is None:
            klam = kl
        elif kl != klam:
            raise AssertionError(f"dim ker lambda varies across samples: {klam} vs {kl}")
    best = _minimum([r[1] for r in rows])
    hits = [r for r in rows if r[1] == best]
    if len(hits) < 2:
        raise MinimumUnstable(f"minimal profile attained by {len(hits)} of {samples} samples; raise --samples")
    c, dims, ranks = hits[0]
    prof = BettiProfile(best, ranks, {"seed": seed, "coords": [int(x) for x in c], "samples": samples})
    return GenericResult(prof, rows, len(hits), klam or {})


def exhaustive_minimum(X, p: Perversity, values=(-1, 0, 1), tower: ISTower | None = None) -> dict:
    """Coordinatewise-minimal profile over the full grid values^dim of the linear part."""
    tower = tower or build_is(X, p)
    step = _depth_one_step(tower)
    if step is None:
        return dict(tower.betti())
    alg = _StepAlgebra(step)
    profs = [alg.profile(c)[0] for c in itertools.product(values, repeat=step.splitting.linear_part_dim)]
    return _minimum(profs)


@dataclass
class DualityReport:
    verdict: str
    d: int
    p: Perversity
    q: Perversity
    dims_p: dict
    dims_q: dict
    mismatches: list

    def to_json(self):
        return {"verdict": self.verdict, "d": self.d, "p": self.p.to_json(), "q": self.q.to_json(),
                "betti_p": {str(n): v for n, v in sorted(self.dims_p.items())},
                "betti_q": {str(n): v for n, v in sorted(self.dims_q.items())},
                "mismatches": self.mismatches}


def duality_check(X, p: Perversity, samples: int = 20, seed: int = 0, q: Perversity | None = None) -> DualityReport:
    """PASS iff the generic profiles satisfy dims_p(i) = dims_q(d - i) for all i.

    ``q`` defaults to the complement of p; passing another perversity gives a
    control run that should fail on asymmetric fixtures.
    """
    q = complement(p) if q is None else q
    d = X.dim
    gp = generic_betti(X, p, samples, seed).profile.dims
    gq = generic_betti(X, q, samples, seed).profile.dims
    bad = [i for i in range(d + 1) if gp.get(i, 0) != gq.get(d - i, 0)]
    return DualityReport("PASS" if not bad else "FAIL", d, p, q, gp, gq, bad)
