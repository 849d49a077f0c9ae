"""Averaged statistics as runnable, seeded experiments.

Every experiment takes an explicit seed; per-trial randomness is derived
from (seed, trial index), so results are identical for any thread count
and rerunning with the same parameters reproduces the samples bit for bit
(reductions are carried out sequentially in trial order).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arith import SieveTable, liouville, von_mangoldt
from .counting import is_admissible_vector, search_expanding
from .densities import (
    ArchimedeanConfig,
    LocalModelConfig,
    OmegaEstimator,
    gamma_w,
    is_admissible_polynomial,
    singular_series,
    w_cutoff,
)
from .errors import HypothesisViolation, InvalidArgument
from .intpoly import CombinatorialCube, IntPolynomial, cube_sample
from .numfield import MonogenicField, gamma_factored

REPORT_VERSION = "1"


# ---------------------------------------------------------------------------
# report plumbing


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    samples: list[dict]
    summary: dict
    seed: int
    runtime_ms: int = 0
    version: str = REPORT_VERSION

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "params": self.params,
                "samples": self.samples,
                "summary": self.summary,
                "seed": self.seed,
                "runtime_ms": self.runtime_ms,
                "version": self.version,
            },
            sort_keys=True,
        )

    def samples_json(self) -> str:
        """The determinism-relevant part of the report."""
        return json.dumps(self.samples, sort_keys=True)

    def to_csv(self) -> str:
        cols: list[str] = []
        for row in self.samples:
            for k in row:
                if k not in cols:
                    cols.append(k)
        lines = [",".join(cols)]
        for row in self.samples:
            lines.append(",".join(_csv_cell(row.get(k)) for k in cols))
        return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, tuple, dict)):
        return '"' + json.dumps(v).replace('"', '""') + '"'
    return str(v)


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _run_trials(fn, trials: int, threads: int) -> list:
    if threads <= 1 or trials <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# averaged arithmetic statistics along polynomial values


def poly_average_statistic(
    weight: str,
    fs,
    x_range: tuple[int, int],
    table: SieveTable,
) -> float:
    """sup over integer x in x_range of |x^-1 sum_{n<=x} prod w(f_i(n)) - M(x)|.

    M(x) is the truncated singular series (cutoff exp(sqrt(log x))) for the
    von Mangoldt weight and 0 for the Liouville weight.  Running sums make
    the sweep O(x1).
    """
    fs = [f if isinstance(f, IntPolynomial) else IntPolynomial(f) for f in fs]
    x0, x1 = x_range
    if not 1 <= x0 <= x1:
        raise InvalidArgument("need 1 <= x0 <= x1")
    if weight == "von_mangoldt":
        w_fn = lambda v: von_mangoldt(v, table)
    elif weight == "liouville":
        w_fn = lambda v: float(liouville(v, table))
    else:
        raise InvalidArgument(f"unknown weight {weight!r}")
    running = 0.0
    sup = 0.0
    main_cache: tuple[int, float] | None = None
    for n in range(1, x1 + 1):
        term = 1.0
        for f in fs:
            term *= w_fn(f.evaluate(n))
            if term == 0.0:
                break
        running += term
        if n >= x0:
            if weight == "von_mangoldt":
                cutoff = w_cutoff(n)
                if main_cache is None or main_cache[0] != cutoff:
                    main_cache = (cutoff, singular_series(fs, cutoff, table))
                main = main_cache[1]
            else:
                main = 0.0
            sup = max(sup, abs(running / n - main))
    return sup


def second_moment_statistic(
    F,
    k: int,
    ell: int,
    g: IntPolynomial,
    H: int,
    x: int,
    alphas,
    table: SieveTable,
) -> float:
    """sup over integer x' in [x/2, x] of
    sum_{|a|,|b|<=H} |sum_{n<=x'} alpha_n F(a n^k + b n^ell + g(n))|^2,
    evaluated exactly with incremental inner sums."""
    if not 0 <= k < ell:
        raise InvalidArgument("need 0 <= k < ell")
    if H < 0 or x < 1:
        raise InvalidArgument("need H >= 0 and x >= 1")
    alphas = list(alphas)
    if len(alphas) < x:
        raise InvalidArgument(f"need {x} weights, got {len(alphas)}")
    side = 2 * H + 1
    partial = np.zeros((side, side))
    a_vals = np.arange(-H, H + 1)
    lo = (x + 1) // 2  # smallest integer >= x/2
    best = 0.0
    for n in range(1, x + 1):
        alpha = alphas[n - 1]
        if alpha != 0.0:
            nk, nl, gn = n**k, n**ell, g.evaluate(n)
            fvals = np.array(
                [[F(int(a) * nk + int(b) * nl + gn) for b in a_vals] for a in a_vals]
            )
            partial += alpha * fvals
        if n >= lo:
            best = max(best, float((partial**2).sum()))
    return best


# ---------------------------------------------------------------------------
# discrepancy profiles over progressions and windows


@dataclass
class BadModuliReport:
    """Empirical exceptional moduli: the largest progression discrepancies."""

    X: int
    q_max: int
    min_window: int
    entries: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "q_max": self.q_max,
            "min_window": self.min_window,
            "entries": self.entries,
        }


def discrepancy_profile(
    F,
    X: int,
    q_max: int,
    min_window: int,
    table: SieveTable,
    max_gcd: int | None = None,
) -> BadModuliReport:
    """D(q) = max over residues u (gcd(u, q) <= max_gcd) and windows
    I subset [1, X], |I| >= min_window, of (q/|I|) |sum_{n in I, n=u(q)} F(n)|.

    Window lengths run over the geometric grid min_window * 1.1^j capped at
    X; starts slide with step max(1, L // 10).  Computed from per-residue
    prefix sums.
    """
    if not 1 <= min_window <= X:
        raise InvalidArgument("need 1 <= min_window <= X")
    if max_gcd is None:
        # the hypothesis-shaped default: exp(sqrt(log X) / log log X)
        max_gcd = max(1, math.ceil(math.exp(math.sqrt(math.log(X)) / math.log(math.log(X)))))
    vals = np.array([F(n) for n in range(1, X + 1)], dtype=float)
    lengths = []
    L = float(min_window)
    while L < X:
        lengths.append(int(round(L)))
        L *= 1.1
    lengths.append(X)
    lengths = sorted(set(lengths))
    entries = []
    for q in range(1, q_max + 1):
        best = (0.0, 0, (0, 0))
        for u in range(1, q + 1):
            if math.gcd(u, q) > max_gcd:
                continue
            sub = vals[u - 1 :: q]
            prefix = np.concatenate([[0.0], np.cumsum(sub)])
            m = len(sub)
            for L in lengths:
                step = max(1, L // 10)
                starts = np.arange(1, X - L + 2, step)
                if len(starts) == 0 or starts[-1] != X - L + 1:
                    starts = np.append(starts, X - L + 1)
                # n = u + q*i in [s, s+L): i in [ceil((s-u)/q), ceil((s+L-u)/q))
                i_lo = np.clip(-(-(starts - u) // q), 0, m)
                i_hi = np.clip(-(-(starts + L - u) // q), 0, m)
                sums = prefix[i_hi] - prefix[i_lo]
                idx = int(np.argmax(np.abs(sums)))
                d = q * abs(float(sums[idx])) / L
                if d > best[0]:
                    s = int(starts[idx])
                    best = (d, u, (s, s + L - 1))
        entries.append({"q": q, "D": best[0], "residue": best[1], "window": list(best[2])})
    entries.sort(key=lambda r: -r["D"])
    return BadModuliReport(X=X, q_max=q_max, min_window=min_window, entries=entries)


# ---------------------------------------------------------------------------
# exceptional fractions over a cube


@dataclass
class ExceptionalFractionResult:
    fraction: float
    wilson_ci: tuple[float, float]
    n_evaluated: int
    n_exceptional: int
    n_inadmissible: int
    report: ExperimentReport


def exceptional_fraction(
    cube: CombinatorialCube,
    weight: str,
    x_range: tuple[int, int],
    threshold: float,
    trials: int,
    seed: int,
    table: SieveTable,
    threads: int = 1,
) -> ExceptionalFractionResult:
    """Monte-Carlo fraction of sampled f in the cube whose averaged
    statistic exceeds the threshold, with a Wilson 95% interval.

    In von Mangoldt mode inadmissible draws (reducible or with a fixed
    prime divisor) are recorded separately and not counted as exceptional;
    the fraction is over the evaluated draws.
    """
    if trials < 0:
        raise InvalidArgument("trials must be >= 0")
    t0 = time.monotonic()

    def one(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        vec = cube_sample(cube, rng)
        f = IntPolynomial(vec)
        row: dict = {"trial": i, "coeffs": list(vec)}
        if weight == "von_mangoldt":
            admissible = f.degree >= 1 and not f.is_zero and is_admissible_polynomial(f)
            if not admissible:
                row["admissible"] = False
                row["statistic"] = None
                return row
            row["admissible"] = True
        stat = poly_average_statistic(weight, [f], x_range, table)
        row["statistic"] = stat
        row["exceptional"] = bool(stat > threshold)
        return row

    samples = _run_trials(one, trials, threads)
    evaluated = [r for r in samples if r.get("statistic") is not None]
    n_exc = sum(1 for r in evaluated if r["exceptional"])
    n_inadm = len(samples) - len(evaluated)
    frac = n_exc / len(evaluated) if evaluated else 0.0
    ci = wilson_interval(n_exc, len(evaluated))
    report = ExperimentReport(
        experiment="exceptional_fraction",
        params={
            "cube": cube.to_json(),
            "weight": weight,
            "x0": x_range[0],
            "x1": x_range[1],
            "threshold": threshold,
            "trials": trials,
            "seed": seed,
        },
        samples=samples,
        summary={
            "fraction": frac,
            "wilson_low": ci[0],
            "wilson_high": ci[1],
            "n_evaluated": len(evaluated),
            "n_exceptional": n_exc,
            "n_inadmissible": n_inadm,
        },
        seed=seed,
        runtime_ms=int((time.monotonic() - t0) * 1000),
    )
    return ExceptionalFractionResult(
        fraction=frac,
        wilson_ci=ci,
        n_evaluated=len(evaluated),
        n_exceptional=n_exc,
        n_inadmissible=n_inadm,
        report=report,
    )


# ---------------------------------------------------------------------------
# the integral Hasse census


def hasse_experiment(
    K: MonogenicField,
    d: int,
    H: int,
    trials: int,
    seed: int,
    search_budget: int = 5 * 10**7,
    k_max: int = 12,
    threads: int = 1,
) -> ExperimentReport:
    """Census of N(x) = f_c(t): sample c with c0 > 0 uniformly, classify by
    Z_p solubility at the critical primes, and hunt integer points with an
    expanding box for the admissible ones.

    The admissible fraction among c0 > 0 draws estimates prod_p sigma_p;
    half of it is the everywhere-locally-soluble share of the full box.
    """
    if trials < 0 or d < 0 or H < 1:
        raise InvalidArgument("need trials >= 0, d >= 0, H >= 1")
    t0 = time.monotonic()

    def one(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        c = (int(rng.integers(1, H + 1)),) + tuple(
            int(v) for v in rng.integers(-H, H + 1, size=d)
        )
        res = is_admissible_vector(c, K, k_max=k_max)
        row: dict = {"trial": i, "coeffs": list(c)}
        if res.verdict is None:
            row["status"] = "unknown"
            return row
        if res.verdict is False:
            row["status"] = "inadmissible"
            return row
        row["status"] = "admissible"
        row["witness_primes"] = [
            {"p": cert.p, "k": cert.witness["k"], "alpha": cert.witness["alpha"]}
            for cert in res.certificates
        ]
        sol, spent = search_expanding(K, IntPolynomial(c), search_budget=search_budget)
        row["search_spent"] = spent
        if sol is None:
            row["solved"] = False
        else:
            row["solved"] = True
            row["solution"] = {"x": list(sol[0]), "t": sol[1]}
        return row

    samples = _run_trials(one, trials, threads)
    n_adm = sum(1 for r in samples if r["status"] == "admissible")
    n_inadm = sum(1 for r in samples if r["status"] == "inadmissible")
    n_unknown = sum(1 for r in samples if r["status"] == "unknown")
    n_solved = sum(1 for r in samples if r.get("solved"))
    adm_ci = wilson_interval(n_adm, trials) if trials else (0.0, 1.0)
    solved_ci = wilson_interval(n_solved, n_adm) if n_adm else (0.0, 1.0)
    return ExperimentReport(
        experiment="hasse",
        params={
            "field": K.to_json(),
            "d": d,
            "H": H,
            "trials": trials,
            "seed": seed,
            "search_budget": search_budget,
            "k_max": k_max,
        },
        samples=samples,
        summary={
            "n_admissible": n_adm,
            "n_inadmissible": n_inadm,
            "n_unknown": n_unknown,
            "n_solved": n_solved,
            "admissible_fraction": n_adm / trials if trials else 0.0,
            "admissible_wilson": list(adm_ci),
            "local_density_estimate": n_adm / trials if trials else 0.0,
            "local_density_halved": 0.5 * n_adm / trials if trials else 0.0,
            "solved_fraction_among_admissible": n_solved / n_adm if n_adm else 0.0,
            "solved_wilson": list(solved_ci),
        },
        seed=seed,
        runtime_ms=int((time.monotonic() - t0) * 1000),
    )


# ---------------------------------------------------------------------------
# the rough-number model identity


@dataclass
class WTrickResult:
    lhs: float
    rhs: float
    relative_error: float | None


def w_trick_check(fs, x: int, w: float | None, table: SieveTable) -> WTrickResult:
    """lhs = sum_{n<=x} prod Lambda_w(f_i(n)); rhs = truncated singular
    series at exp(sqrt(log x)) times x.  The relative error is None when
    the series vanishes."""
    fs = [f if isinstance(f, IntPolynomial) else IntPolynomial(f) for f in fs]
    if x < 2:
        raise InvalidArgument("need x >= 2")
    if w is None:
        w = w_cutoff(x)
    primes = [int(p) for p in table.primes_upto(int(w))]
    scale = 1.0
    for p in primes:
        scale *= p / (p - 1)
    lhs = 0.0
    for n in range(1, x + 1):
        term = 1.0
        for f in fs:
            v = f.evaluate(n)
            if v == 0:
                term = 0.0
                break
            v = abs(v)
            if any(v % p == 0 for p in primes):
                term = 0.0
                break
            term *= scale
        lhs += term
    rhs = singular_series(fs, w_cutoff(x), table) * x
    rel = abs(lhs - rhs) / rhs if rhs != 0 else None
    return WTrickResult(lhs=lhs, rhs=rhs, relative_error=rel)


# ---------------------------------------------------------------------------
# first moment of the localised model over a progression


@dataclass
class FirstMomentResult:
    S: float
    main_term: float
    relative_error: float
    integral: float
    integral_stderr: float
    gamma_factor: float
    n_terms: int


def first_moment_check(
    K: MonogenicField,
    interval: tuple[int, int],
    q: int,
    u: int,
    B: float,
    local: LocalModelConfig,
    arch: ArchimedeanConfig,
    table: SieveTable,
    rng_seed=0,
) -> FirstMomentResult:
    """S(I; q, u) = sum over n in I, n = u (q), of gamma(W, n) omega(n; B),
    against the main term gamma(gcd(q, W), u) / q * int_I omega.

    Refuses (hypothesis violation) when p^k | q for a sieved prime or when
    gcd(u, q) is larger than exp(2 sqrt(log X) / log log X)."""
    lo, hi = interval
    if not 1 <= lo <= hi:
        raise InvalidArgument("need 1 <= lo <= hi")
    if not 1 <= u <= q:
        raise InvalidArgument("need 1 <= u <= q")
    X = hi
    k = local.k_exponent
    modulus = []
    for p in (int(r) for r in table.primes_upto(int(local.w))):
        vp = 0
        qq = q
        while qq % p == 0:
            qq //= p
            vp += 1
        if vp >= k:
            raise HypothesisViolation(f"p^k = {p}^{k} divides q = {q}")
        if vp:
            modulus.append((p, vp))
    if X >= 16:
        gcd_bound = math.exp(2 * math.sqrt(math.log(X)) / math.log(math.log(X)))
        if math.gcd(u, q) > gcd_bound:
            raise HypothesisViolation(
                f"gcd(u, q) = {math.gcd(u, q)} exceeds the window bound {gcd_bound:.1f}"
            )
    est = OmegaEstimator(K, B, arch, rng_seed)
    ns = np.arange(lo + (u - lo) % q, hi + 1, q, dtype=np.int64)
    dens, _ = est.density_many(ns.astype(float))
    S = 0.0
    n_terms = 0
    for n, om in zip(ns.tolist(), dens.tolist()):
        if om > 0.0:
            S += float(gamma_w(K, int(n), local, table)) * om
            n_terms += 1
    integral = est.integral(float(lo), float(hi))
    gamma_factor = float(gamma_factored(K, modulus, u)) if modulus else 1.0
    main = gamma_factor / q * integral.value
    rel = abs(S - main) / abs(main) if main != 0 else math.inf
    return FirstMomentResult(
        S=S,
        main_term=main,
        relative_error=rel,
        integral=integral.value,
        integral_stderr=integral.stderr,
        gamma_factor=gamma_factor,
        n_terms=n_terms,
    )
