"""Singular series, admissibility, the rough-number model for Lambda,
archimedean densities of the norm form, and the localised model hat_R.

The archimedean density omega(y; B) is the density of lattice-ish mass of
norm values near y inside the dilated ball B*Ball(2^(-1/e) e1, kappa):

    omega(y; B) ~ vol{x in B*Ball : N(x) in [y-h, y+h]} / (2h),

estimated here with randomized quasi-Monte-Carlo: 8 independently
scrambled Sobol batches rejection-sampled into the ball; every estimate
carries the batch standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .arith import SieveTable, factor
from .errors import InvalidArgument, ResourceLimit
from .intpoly import IntPolynomial, count_roots_mod_p, is_irreducible_over_q
from .numfield import MonogenicField, gamma_factored, norm_eval_float, norm_residue_counts

_N_BATCHES = 8
_SIGMA_BUDGET = 10**8


class Estimate(NamedTuple):
    """A Monte-Carlo estimate with its standard error."""

    value: float
    stderr: float


@dataclass
class ArchimedeanConfig:
    """Region and estimator parameters for omega(y; B).

    kappa is the region radius (validated <= 0.2 so the x1-derivative of
    the norm stays bounded below on the ball); bandwidth_eta is the kernel
    half-width as a fraction of B^e.
    """

    kappa: float = 0.1
    mc_samples: int = 2**16
    bandwidth_eta: float = 0.01

    def __post_init__(self):
        if not 0 < self.kappa <= 0.2:
            raise InvalidArgument(f"kappa must be in (0, 0.2], got {self.kappa}")
        if self.mc_samples < 1:
            raise InvalidArgument("mc_samples must be positive")
        if self.bandwidth_eta <= 0:
            raise InvalidArgument("bandwidth_eta must be positive")


@dataclass
class LocalModelConfig:
    """Parameters of the localised non-archimedean model gamma(W, .).

    W = prod_{p <= w} p^k_exponent is only ever used in factored form.  The
    growing exponent 1000*d*A*ceil(log log x) is available behind
    use_paper_exponent; the density stabilises in the exponent, so the
    small default loses nothing measurable.
    """

    w: float = 20.0
    k_exponent: int = 3
    A: int = 1
    d: int = 1
    use_paper_exponent: bool = False

    def __post_init__(self):
        if self.w < 2:
            raise InvalidArgument("w must be >= 2")
        if self.k_exponent < 1:
            raise InvalidArgument("k_exponent must be >= 1")

    def exponent_for(self, x: float) -> int:
        if self.use_paper_exponent:
            return 1000 * self.d * self.A * math.ceil(math.log(math.log(x)))
        return self.k_exponent

    def factored_modulus(self, table: SieveTable, x: float | None = None):
        k = self.exponent_for(x) if x is not None else self.k_exponent
        return [(int(p), k) for p in table.primes_upto(int(self.w))]


def w_cutoff(x: float) -> int:
    """The prime cutoff exp(sqrt(log x)), rounded down."""
    if x < 2:
        raise InvalidArgument("cutoff needs x >= 2")
    return int(math.exp(math.sqrt(math.log(x))))


# ---------------------------------------------------------------------------
# singular series and admissibility


def singular_series(fs, P: float, table: SieveTable) -> float:
    """Truncated product over p <= P of (1-1/p)^(-r) (1 - #roots/p).

    #roots counts u in F_p with f_1(u)...f_r(u) = 0.  Positive exactly when
    no p <= P is a fixed prime divisor of the product.
    """
    fs = [f if isinstance(f, IntPolynomial) else IntPolynomial(f) for f in fs]
    if not fs:
        raise InvalidArgument("singular_series needs at least one polynomial")
    for f in fs:
        if f.is_zero or f.degree < 1:
            raise InvalidArgument("singular_series needs degree >= 1 factors")
    r = len(fs)
    out = 1.0
    for p in (int(q) for q in table.primes_upto(int(P))):
        reduced = [[c % p for c in f.coeffs] for f in fs]
        roots = 0
        for u in range(p):
            for cs in reduced:
                acc = 0
                for c in cs:
                    acc = (acc * u + c) % p
                if acc == 0:
                    roots += 1
                    break
        if roots == p:
            return 0.0
        # (1-1/p)^(-r) (1 - roots/p) as one division, so factors that are
        # exactly 1 (roots = 1, r = 1) stay exact in floating point
        out *= (p - roots) * float(p) ** (r - 1) / float((p - 1) ** r)
    return out


def is_admissible_polynomial(f: IntPolynomial) -> bool:
    """Irreducible over Q with no fixed prime divisor.

    Only primes p <= max(deg f, largest prime factor of the content) can be
    fixed divisors: for larger p the reduction is a nonzero polynomial of
    degree < p, so it cannot vanish on all of F_p.
    """
    if not is_irreducible_over_q(f):
        return False
    bound = f.degree
    for p, _ in factor(f.content()).factors:
        bound = max(bound, p)
    p = 2
    while p <= bound:
        if count_roots_mod_p(f, p) == p:
            return False
        p = _next_prime(p)
    return True


def _next_prime(p: int) -> int:
    from .arith import is_probable_prime

    q = p + 1
    while not is_probable_prime(q):
        q += 1
    return q


def w_trick_lambda(n: int, w: float, table: SieveTable) -> float:
    """Rough-number model for Lambda: prod_{p<=w}(1-1/p)^(-1) if n has no
    prime factor <= w (and n != 0), else 0.  W is never materialised."""
    if n == 0:
        return 0.0
    m = abs(n)
    scale = 1.0
    for p in (int(q) for q in table.primes_upto(int(w))):
        if m % p == 0:
            return 0.0
        scale *= p / (p - 1)
    return scale


# ---------------------------------------------------------------------------
# archimedean density


def ball_volume(e: int) -> float:
    return math.pi ** (e / 2) / math.gamma(e / 2 + 1)


def region_center(e: int) -> np.ndarray:
    c = np.zeros(e)
    c[0] = 2 ** (-1 / e)
    return c


_GRADIENT_SEED = 20557


def check_region_gradient(K: MonogenicField, kappa: float, samples: int = 1000) -> float:
    """Assert dN/dx1 stays above 0.5 e (2^(-1/e))^(e-1) on the unit region.

    Returns the sampled minimum.  Raises invalid-argument when the bound
    fails, which signals that kappa is too large for this field.
    """
    e = K.e
    rng = np.random.default_rng(_GRADIENT_SEED)
    pts = _sample_ball_rng(rng, e, samples) * kappa + region_center(e)
    dterms = K.gradient_terms[0]
    vals = np.zeros(len(pts))
    for exps, c in dterms:
        term = np.full(len(pts), float(c))
        for i, ei in enumerate(exps):
            if ei:
                term *= pts[:, i] ** ei
        vals += term
    lo = float(vals.min())
    bound = 0.5 * e * (2 ** (-1 / e)) ** (e - 1)
    if lo < bound:
        raise InvalidArgument(
            f"kappa={kappa}: sampled min dN/dx1 = {lo:.4f} < {bound:.4f} on the region"
        )
    return lo


def _sample_ball_rng(rng: np.random.Generator, e: int, n: int) -> np.ndarray:
    """Plain uniform points of the unit e-ball (used for the gradient check)."""
    out = np.empty((0, e))
    while len(out) < n:
        cand = rng.uniform(-1, 1, size=(2 * n + 16, e))
        cand = cand[(cand**2).sum(axis=1) < 1.0]
        out = np.vstack([out, cand])
    return out[:n]


def _sobol_ball_batches(e: int, n_total: int, seed) -> list[np.ndarray]:
    """Scrambled-Sobol points of the unit ball, split into batches."""
    import warnings

    per = max(1, n_total // _N_BATCHES)
    rate = ball_volume(e) / 2**e  # cube-to-ball acceptance rate
    seeds = np.random.SeedSequence(seed).spawn(_N_BATCHES)
    batches = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non-power-of-2 draws
        for ss in seeds:
            eng = qmc.Sobol(d=e, scramble=True, seed=np.random.default_rng(ss))
            pts = np.empty((0, e))
            while len(pts) < per:
                m = int(math.ceil((per - len(pts)) / rate * 1.2)) + 64
                cand = eng.random(m) * 2.0 - 1.0
                cand = cand[(cand**2).sum(axis=1) < 1.0]
                pts = np.vstack([pts, cand])
            batches.append(pts[:per])
    return batches


class OmegaEstimator:
    """Shared sample set for omega(y; B) queries at fixed (K, B, config).

    All estimates from one instance use the same randomized-QMC points, so
    queries at nearby y are positively correlated (useful for differences
    and for the count_pair variance reduction).
    """

    def __init__(self, K: MonogenicField, B: float, cfg: ArchimedeanConfig, rng_seed=0):
        if B <= 0:
            raise InvalidArgument("B must be positive")
        check_region_gradient(K, cfg.kappa)
        self.K = K
        self.B = float(B)
        self.cfg = cfg
        self.volume = (cfg.kappa * B) ** K.e * ball_volume(K.e)
        self.bandwidth = cfg.bandwidth_eta * B**K.e
        center = region_center(K.e) * B
        self.batch_values = []
        for pts in _sobol_ball_batches(K.e, cfg.mc_samples, rng_seed):
            xs = pts * (cfg.kappa * B) + center
            self.batch_values.append(np.sort(norm_eval_float(K, xs)))
        self.support = (
            min(float(v[0]) for v in self.batch_values),
            max(float(v[-1]) for v in self.batch_values),
        )

    def _batch_fractions(self, lo, hi) -> np.ndarray:
        """Per-batch fraction of sampled points with norm in [lo, hi]."""
        fracs = np.empty(_N_BATCHES)
        for i, vals in enumerate(self.batch_values):
            a = np.searchsorted(vals, lo, side="left")
            b = np.searchsorted(vals, hi, side="right")
            fracs[i] = (b - a) / len(vals)
        return fracs

    def density(self, y: float) -> Estimate:
        """omega(y; B) with standard error."""
        h = self.bandwidth
        ests = self._batch_fractions(y - h, y + h) * self.volume / (2 * h)
        return Estimate(float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(_N_BATCHES)))

    def density_many(self, ys) -> tuple[np.ndarray, np.ndarray]:
        ys = np.asarray(ys, dtype=float)
        h = self.bandwidth
        ests = np.empty((_N_BATCHES, len(ys)))
        for i, vals in enumerate(self.batch_values):
            a = np.searchsorted(vals, ys - h, side="left")
            b = np.searchsorted(vals, ys + h, side="right")
            ests[i] = (b - a) / len(vals) * self.volume / (2 * h)
        return ests.mean(axis=0), ests.std(axis=0, ddof=1) / math.sqrt(_N_BATCHES)

    def integral(self, lo: float, hi: float) -> Estimate:
        """int_I omega = vol{x in B*Ball : N(x) in I}, as a proportion."""
        ests = self._batch_fractions(lo, hi) * self.volume
        return Estimate(float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(_N_BATCHES)))


def omega_density(
    K: MonogenicField, y: float, B: float, cfg: ArchimedeanConfig, rng_seed=0
) -> Estimate:
    """One-shot omega(y; B) estimate with standard error."""
    return OmegaEstimator(K, B, cfg, rng_seed).density(y)


# ---------------------------------------------------------------------------
# the localised model


def gamma_w(K: MonogenicField, n: int, local: LocalModelConfig, table: SieveTable) -> Fraction:
    """gamma(W, n) for W = prod_{p <= w} p^k, in factored form."""
    return gamma_factored(K, local.factored_modulus(table), n)


def hat_r(
    K: MonogenicField,
    n: int,
    B: float,
    local: LocalModelConfig,
    arch: ArchimedeanConfig,
    table: SieveTable,
    rng_seed=0,
) -> float:
    """hat_R(n; B) = gamma(W, n) * omega(n; B)."""
    om = omega_density(K, float(n), B, arch, rng_seed)
    return float(gamma_w(K, n, local, table)) * om.value


# ---------------------------------------------------------------------------
# the mixed local density sigma(q) of the full equation N(x) = f(t)


def sigma_mod(K: MonogenicField, f: IntPolynomial, q: int) -> Fraction:
    """q^(-e) #{(x, t) in (Z/q)^(e+1) : N(x) = f(t) mod q}, exact."""
    if q < 1:
        raise InvalidArgument("modulus must be positive")
    if q ** (K.e + 1) > _SIGMA_BUDGET:
        raise ResourceLimit(f"sigma_mod budget: q^(e+1) = {q}^{K.e + 1} > {_SIGMA_BUDGET}")
    counts = norm_residue_counts(K, q)
    total = 0
    for t in range(q):
        total += int(counts[f.evaluate_mod(t, q)])
    return Fraction(total, q**K.e)
