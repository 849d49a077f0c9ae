"""Lattice representation counts, p-adic solubility certificates, and the
admissible-vector test for the equation N(x) = f(t).

Solubility works level by level: the full solution set of
N(x) = f(t) mod p^k is maintained, each level lifting every solution
through all p^(e+1) candidate offsets.  A solution mod p^k whose gradient
vector (grad N(x0), f'(t0)) has p-adic valuation alpha with k >= 2*alpha+1
is a Hensel-liftable witness, so the equation is Z_p-soluble; a level with
no solutions at all is a proof of insolubility.  Certificates are
re-verified with exact arithmetic on emission.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arith import SieveTable
from .densities import ArchimedeanConfig, LocalModelConfig, OmegaEstimator, gamma_w, region_center
from .errors import InvalidArgument, ResourceLimit
from .intpoly import CoefficientVector, IntPolynomial
from .numfield import MonogenicField, norm_eval, norm_gradient

_HIST_BUDGET = 10**9
_SEARCH_BUDGET = 5 * 10**7
_LIFT_BUDGET = 4_000_000
DEFAULT_K_MAX = 12  # 2 * (e + valuation headroom) at e <= 4


# ---------------------------------------------------------------------------
# norm histograms


@dataclass
class NormHistogram:
    """Exact counts R(n; B) = #{x in Z^e within the dilated region : N(x)=n}."""

    B: float
    region: ArchimedeanConfig
    counts: dict[int, int]
    lattice_total: int

    def get(self, n: int) -> int:
        return self.counts.get(n, 0)

    def to_json(self) -> dict:
        return {
            "B": self.B,
            "kappa": self.region.kappa,
            "counts": {str(n): c for n, c in sorted(self.counts.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "NormHistogram":
        counts = {int(n): int(c) for n, c in data["counts"].items()}
        return cls(
            B=float(data["B"]),
            region=ArchimedeanConfig(kappa=float(data["kappa"])),
            counts=counts,
            lattice_total=sum(counts.values()),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _box_axes(K: MonogenicField, B: float, kappa: float):
    center = region_center(K.e) * B
    r = kappa * B
    axes = []
    for i in range(K.e):
        lo = math.ceil(center[i] - r)
        hi = math.floor(center[i] + r)
        axes.append(np.arange(lo, hi + 1, dtype=np.int64))
    return center, r, axes


def build_norm_histogram(K: MonogenicField, B: float, cfg: ArchimedeanConfig) -> NormHistogram:
    """Enumerate the integer points of the dilated region exactly."""
    if B <= 0:
        raise InvalidArgument("B must be positive")
    if (2 * cfg.kappa * B + 1) ** K.e > _HIST_BUDGET:
        raise ResourceLimit("histogram box exceeds the enumeration budget")
    center, r, axes = _box_axes(K, B, cfg.kappa)
    if any(len(a) == 0 for a in axes):
        return NormHistogram(B=B, region=cfg, counts={}, lattice_total=0)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    dist2 = ((pts - center) ** 2).sum(axis=1)
    pts = pts[dist2 < r * r]
    counts: dict[int, int] = {}
    # int64 is safe while |coords|^e * coeffs stays below 2^62
    maxc = float(np.abs(pts).max(initial=0)) + 1
    coeff_bound = max(abs(c) for _, c in K.norm_terms) * len(K.norm_terms)
    if maxc**K.e * coeff_bound < 2**62:
        norms = np.zeros(len(pts), dtype=np.int64)
        for exps, c in K.norm_terms:
            term = np.full(len(pts), c, dtype=np.int64)
            for i, ei in enumerate(exps):
                if ei:
                    term *= pts[:, i] ** ei
            norms += term
        vals, cnts = np.unique(norms, return_counts=True)
        counts = {int(v): int(c) for v, c in zip(vals, cnts)}
    else:  # exact big-int fallback
        for row in pts:
            n = norm_eval(K, tuple(int(v) for v in row))
            counts[n] = counts.get(n, 0) + 1
    return NormHistogram(B=B, region=cfg, counts=counts, lattice_total=int(len(pts)))


def count_pair(
    c: CoefficientVector,
    x: int,
    K: MonogenicField,
    hist: NormHistogram,
    local: LocalModelConfig,
    arch: ArchimedeanConfig,
    table: SieveTable,
    rng_seed=0,
) -> tuple[int, float]:
    """(N(x), hat_N(x)) for f_c: exact histogram sum and localised model sum.

    The model sum shares one omega sample set across all n for variance
    reduction.
    """
    f = IntPolynomial(c)
    values = [f.evaluate(n) for n in range(1, x + 1)]
    n_exact = sum(hist.get(v) for v in values)
    est = OmegaEstimator(K, hist.B, arch, rng_seed)
    dens, _ = est.density_many([float(v) for v in values])
    n_model = 0.0
    for v, om in zip(values, dens):
        if om > 0.0:
            n_model += float(gamma_w(K, v, local, table)) * float(om)
    return n_exact, n_model


# ---------------------------------------------------------------------------
# p-adic solubility


@dataclass
class SolubilityCertificate:
    """Outcome of the level-by-level Z_p solubility search.

    soluble   => witness (x0, t0) mod p^k with valuation alpha and
                 k >= 2*alpha + 1 (Hensel-liftable)
    insoluble => obstruction_level k at which the exhaustive solution set
                 mod p^k is empty
    unknown   => neither certificate found within k_max / budget
    """

    verdict: str
    p: int
    witness: dict | None = None
    obstruction_level: int | None = None
    budget_exceeded: bool = False

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "p": self.p}
        if self.witness is not None:
            out["witness"] = dict(self.witness)
        if self.obstruction_level is not None:
            out["obstruction_level"] = self.obstruction_level
        if self.budget_exceeded:
            out["budget_exceeded"] = True
        return out


def _vp_vector(values, p: int, cap: int) -> int:
    """min p-adic valuation over the components, capped at cap."""
    best = cap
    for v in values:
        v = int(v) % p**cap
        if v == 0:
            continue
        a = 0
        while v % p == 0:
            v //= p
            a += 1
        best = min(best, a)
        if best == 0:
            return 0
    return best


def _verify_witness(K: MonogenicField, f: IntPolynomial, p: int, wit: dict) -> bool:
    x0 = tuple(wit["x"])
    t0 = wit["t"]
    k = wit["k"]
    alpha = wit["alpha"]
    q = p**k
    if (norm_eval(K, x0) - f.evaluate(t0)) % q != 0:
        return False
    grad = list(norm_gradient(K, x0)) + [f.derivative().evaluate(t0)]
    return _vp_vector(grad, p, k) == alpha and k >= 2 * alpha + 1


def _eval_norm_minus_f_mod(K: MonogenicField, f: IntPolynomial, pts: np.ndarray, q: int):
    """(N(x) - f(t)) mod q for rows (x..., t); exact for any q."""
    if q <= 3_000_000_000:
        arr = pts.astype(np.int64) % q
        total = np.zeros(len(pts), dtype=np.int64)
        for exps, c in K.norm_terms:
            term = np.full(len(pts), c % q, dtype=np.int64)
            for i, ei in enumerate(exps):
                for _ in range(ei):
                    term = term * arr[:, i] % q
            total = (total + term) % q
        fv = np.zeros(len(pts), dtype=np.int64)
        for coef in f.coeffs:
            fv = (fv * arr[:, -1] + coef % q) % q
        return (total - fv) % q
    # big-modulus fallback in exact python ints
    out = np.empty(len(pts), dtype=object)
    for idx, row in enumerate(pts):
        x0 = tuple(int(v) for v in row[:-1])
        out[idx] = (norm_eval(K, x0) - f.evaluate(int(row[-1]))) % q
    return out


def local_solubility(
    K: MonogenicField,
    f: IntPolynomial,
    p: int,
    k_max: int = DEFAULT_K_MAX,
    budget: int = _LIFT_BUDGET,
) -> SolubilityCertificate:
    """Certify Z_p solubility of N(x) = f(t) or find an obstruction."""
    if f.is_zero:
        raise InvalidArgument("local_solubility needs a nonzero polynomial")
    if p < 2:
        raise InvalidArgument("p must be prime")
    e = K.e
    width = e + 1
    if p**width > budget:
        raise ResourceLimit(f"level-1 grid p^(e+1) = {p}^{width} exceeds budget")
    axes = [np.arange(p, dtype=np.int64)] * width
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    sols = grid[_eval_norm_minus_f_mod(K, f, grid, p) == 0]
    fprime = f.derivative()
    budget_hit = False
    for k in range(1, k_max + 1):
        q = p**k
        if len(sols) == 0:
            return SolubilityCertificate(verdict="insoluble", p=p, obstruction_level=k)
        # look for a Hensel-liftable witness at this level
        for row in sols:
            x0 = tuple(int(v) for v in row[:e])
            t0 = int(row[e])
            grad = list(norm_gradient(K, x0)) + [fprime.evaluate(t0)]
            alpha = _vp_vector(grad, p, k)
            if k >= 2 * alpha + 1:
                wit = {"x": list(x0), "t": t0, "k": k, "alpha": alpha}
                assert _verify_witness(K, f, p, wit)
                return SolubilityCertificate(verdict="soluble", p=p, witness=wit)
        if k == k_max:
            break
        if len(sols) * p**width > budget:
            budget_hit = True
            break
        offsets = grid * q
        cand = (sols[:, None, :] + offsets[None, :, :]).reshape(-1, width)
        sols = cand[_eval_norm_minus_f_mod(K, f, cand, p ** (k + 1)) == 0]
    return SolubilityCertificate(verdict="unknown", p=p, budget_exceeded=budget_hit)


def critical_primes(c: CoefficientVector, K: MonogenicField) -> list[int]:
    """Primes where Z_p solubility is not automatic: p <= deg, p | e,
    p | disc(g), p | content(f_c).

    For any other prime there is t with p not dividing f_c(t) (deg < p and
    p coprime to the content), rho(p, f_c(t)) > 0 with equality in the
    unramified count, and Euler's identity x.grad N = e N(x) makes such a
    point non-singular, so Hensel applies with alpha = 0.
    """
    from .arith import factor, is_probable_prime

    f = IntPolynomial(c)
    d = len(c) - 1
    crits = {p for p in range(2, d + 1) if is_probable_prime(p)}
    for n in (K.e, K.disc_g, f.content()):
        for p, _ in factor(abs(n)).factors:
            crits.add(p)
    return sorted(crits)


@dataclass
class AdmissibilityResult:
    """verdict True/False, or None when some prime stayed unknown."""

    verdict: bool | None
    certificates: list[SolubilityCertificate] = field(default_factory=list)
    critical_primes: list[int] = field(default_factory=list)
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "critical_primes": self.critical_primes,
            "certificates": [c.to_json() for c in self.certificates],
        }


def is_admissible_vector(
    c: CoefficientVector, K: MonogenicField, k_max: int = DEFAULT_K_MAX
) -> AdmissibilityResult:
    """c0 > 0 and N(x) = f_c(t) soluble over Z_p for every prime p.

    Solubility is decided exactly at the critical primes; it is automatic
    elsewhere (see critical_primes).  Unknown verdicts are surfaced, never
    coerced.
    """
    f = IntPolynomial(c)
    if f.is_zero:
        raise InvalidArgument("admissibility of the zero polynomial")
    if c[0] <= 0:
        return AdmissibilityResult(verdict=False, reason="leading coefficient not positive")
    crits = critical_primes(c, K)
    certs = []
    verdict: bool | None = True
    reason = "soluble at every critical prime"
    for p in crits:
        cert = local_solubility(K, f, p, k_max=k_max)
        certs.append(cert)
        if cert.verdict == "insoluble":
            verdict = False
            reason = f"local obstruction at p={p}"
            break
        if cert.verdict == "unknown":
            verdict = None
            reason = f"solubility undecided at p={p}"
    return AdmissibilityResult(
        verdict=verdict, certificates=certs, critical_primes=crits, reason=reason
    )


# ---------------------------------------------------------------------------
# integer point search


def integer_point_search(
    K: MonogenicField,
    f: IntPolynomial,
    t_range: tuple[int, int],
    coeff_bound: int,
    budget: int = _SEARCH_BUDGET,
) -> list[tuple[tuple[int, ...], int]]:
    """All solutions of N(x) = f(t) with t in t_range, |x|_inf <= coeff_bound.

    Exhaustive within the stated box; an empty list is a valid outcome.
    """
    t_lo, t_hi = t_range
    if t_hi < t_lo:
        raise InvalidArgument("empty t range")
    if coeff_bound < 0:
        raise InvalidArgument("coeff_bound must be >= 0")
    side = 2 * coeff_bound + 1
    if side**K.e > budget:
        raise ResourceLimit(f"search box {side}^{K.e} exceeds budget {budget}")
    axis = np.arange(-coeff_bound, coeff_bound + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * K.e), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    coeff_scale = max(abs(cc) for _, cc in K.norm_terms) * len(K.norm_terms)
    if (float(coeff_bound) + 1) ** K.e * coeff_scale < 2**62:
        norms = np.zeros(len(pts), dtype=np.int64)
        for exps, cc in K.norm_terms:
            term = np.full(len(pts), cc, dtype=np.int64)
            for i, ei in enumerate(exps):
                if ei:
                    term *= pts[:, i] ** ei
            norms += term
        by_norm: dict[int, list] = {}
        for idx, n in enumerate(norms.tolist()):
            by_norm.setdefault(int(n), []).append(idx)
    else:
        by_norm = {}
        for idx, row in enumerate(pts):
            n = norm_eval(K, tuple(int(v) for v in row))
            by_norm.setdefault(n, []).append(idx)
    out = []
    for t in range(t_lo, t_hi + 1):
        n = f.evaluate(t)
        for idx in by_norm.get(n, ()):
            out.append((tuple(int(v) for v in pts[idx]), t))
    out.sort()
    return out


def search_expanding(
    K: MonogenicField,
    f: IntPolynomial,
    search_budget: int = _SEARCH_BUDGET,
    t_start: int = 8,
):
    """Expanding-box search used by the census experiment.

    Doubles the t box until a solution appears or the cumulative box size
    passes the budget.  Returns (solution or None, spent_budget).
    """
    spent = 0
    T = t_start
    while True:
        t_range = (-T, T)
        fmax = max(abs(f.evaluate(t)) for t in range(-T, T + 1))
        bound = max(1, math.ceil(float(fmax) ** (1.0 / K.e)))
        cost = (2 * bound + 1) ** K.e
        if spent + cost > search_budget:
            return None, spent
        spent += cost
        found = integer_point_search(K, f, t_range, bound, budget=search_budget)
        if found:
            return found[0], spent
        T *= 2


# independent slow-path check used by tests: enumerate x directly
def brute_force_points(K, f, t_range, coeff_bound):
    out = []
    for t in range(t_range[0], t_range[1] + 1):
        target = f.evaluate(t)
        for x in itertools.product(range(-coeff_bound, coeff_bound + 1), repeat=K.e):
            if norm_eval(K, x) == target:
                out.append((x, t))
    return sorted(out)
