import math
from fractions import Fraction

import numpy as np
import pytest

from polylab.densities import (
    ArchimedeanConfig,
    LocalModelConfig,
    OmegaEstimator,
    ball_volume,
    check_region_gradient,
    gamma_w,
    hat_r,
    is_admissible_polynomial,
    omega_density,
    sigma_mod,
    singular_series,
    w_cutoff,
    w_trick_lambda,
)
from polylab.errors import InvalidArgument, ResourceLimit
from polylab.intpoly import IntPolynomial
from polylab.numfield import gamma_factored, gaussian_field, norm_eval, sqrt2_field

QI = gaussian_field()


def P(*coeffs):
    return IntPolynomial(coeffs)


# -- singular series -----------------------------------------------------------


def test_singular_series_identity_poly(table):
    assert singular_series([P(1, 0)], 100, table) == 1.0
    assert singular_series([P(1, 0)], 10_000, table) == 1.0


def test_singular_series_fixed_divisor(table):
    assert singular_series([P(2, 0)], 10, table) == 0.0


def test_singular_series_t2_plus_1_vs_independent_product(table):
    # independent oracle: per-prime root counting coded directly
    f = P(1, 0, 1)
    got = singular_series([f], 100, table)
    expected = 1.0
    for p in [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59,
              61, 67, 71, 73, 79, 83, 89, 97]:
        roots = sum(1 for u in range(p) if (u * u + 1) % p == 0)
        expected *= (1 - 1 / p) ** (-1) * (1 - roots / p)
    assert got == pytest.approx(expected, abs=1e-12)
    # the truncated Hardy-Littlewood constant is ~1.37 at this cutoff
    assert 1.2 < got < 1.5


def test_singular_series_pair(table):
    # (t, t+2): factor p=2 is (1-1/2)^-2 (1-1/2) = 2, odd p: (1-1/p)^-2 (1-2/p)
    got = singular_series([P(1, 0), P(1, 2)], 30, table)
    expected = 2.0
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29):
        expected *= (1 - 1 / p) ** (-2) * (1 - 2 / p)
    assert got == pytest.approx(expected, rel=1e-12)


def test_singular_series_positivity_matches_admissibility(table):
    rng = np.random.default_rng(8)
    for _ in range(40):
        coeffs = [int(rng.integers(-30, 31)) for _ in range(3)]
        f = IntPolynomial(coeffs)
        if f.is_zero or f.degree < 1:
            continue
        s = singular_series([f], 50, table)
        has_fixed_divisor = any(
            sum(1 for u in range(p) if f.evaluate(u) % p == 0) == p for p in (2, 3, 5, 7)
        )
        assert (s == 0.0) == has_fixed_divisor


def test_singular_series_stabilisation_logged(table_100k):
    f = P(1, 0, 1)
    deltas = []
    prev = singular_series([f], 50, table_100k)
    for P_cut in (100, 200, 400, 800):
        cur = singular_series([f], P_cut, table_100k)
        deltas.append(abs(cur - prev))
        prev = cur
    print(f"singular series stabilisation deltas for t^2+1: {deltas}")
    assert all(math.isfinite(d) for d in deltas)


# -- admissibility ---------------------------------------------------------------


def test_admissible_polynomial():
    assert is_admissible_polynomial(P(1, 0, 1)) is True
    assert is_admissible_polynomial(P(2, 0)) is False  # fixed divisor 2
    assert is_admissible_polynomial(P(1, 1, 2)) is False  # t^2+t+2 even everywhere
    assert is_admissible_polynomial(P(1, 0, -1)) is False  # reducible
    assert is_admissible_polynomial(P(1, 2)) is True
    assert is_admissible_polynomial(P(3, 0, 0, 2)) is True


# -- W-tricked model ---------------------------------------------------------------


def test_w_trick_lambda(table):
    assert w_trick_lambda(11, 10, table) == pytest.approx(35 / 8, abs=1e-12)
    assert w_trick_lambda(10, 10, table) == 0.0
    assert w_trick_lambda(0, 10, table) == 0.0
    assert w_trick_lambda(-13, 10, table) == pytest.approx(35 / 8, abs=1e-12)


def test_w_cutoff():
    assert w_cutoff(10_000) == int(math.exp(math.sqrt(math.log(10_000))))
    with pytest.raises(InvalidArgument):
        w_cutoff(1)


def test_local_model_config(table):
    cfg = LocalModelConfig(w=10, k_exponent=2)
    assert cfg.factored_modulus(table) == [(2, 2), (3, 2), (5, 2), (7, 2)]
    paper = LocalModelConfig(w=10, k_exponent=2, use_paper_exponent=True, d=2, A=1)
    assert paper.exponent_for(10**6) == 1000 * 2 * 1 * math.ceil(math.log(math.log(10**6)))
    with pytest.raises(InvalidArgument):
        LocalModelConfig(w=1)
    with pytest.raises(InvalidArgument):
        LocalModelConfig(k_exponent=0)


# -- archimedean density ---------------------------------------------------------


def test_archimedean_config_validation():
    with pytest.raises(InvalidArgument):
        ArchimedeanConfig(kappa=0.5)
    with pytest.raises(InvalidArgument):
        ArchimedeanConfig(mc_samples=0)
    with pytest.raises(InvalidArgument):
        ArchimedeanConfig(bandwidth_eta=0.0)


def test_region_gradient_check():
    lo = check_region_gradient(QI, 0.1)
    assert lo >= 0.5 * 2 * 2 ** (-1 / 2)
    lo3 = check_region_gradient(sqrt2_field(), 0.15)
    assert lo3 > 0


def test_omega_zero_outside_support():
    cfg = ArchimedeanConfig(mc_samples=2**12)
    B = 20.0
    est = omega_density(QI, -(B**2), B, cfg, rng_seed=1)
    assert est.value == 0.0
    assert omega_density(QI, 10 * B**2, B, cfg, rng_seed=1).value == 0.0


def test_omega_positive_at_half():
    cfg = ArchimedeanConfig(mc_samples=2**13)
    B = 20.0
    est = omega_density(QI, B**2 / 2, B, cfg, rng_seed=1)
    assert est.value > 0
    assert est.value > 3 * est.stderr


def test_omega_integral_conservation():
    # int omega dy over tiling bins = vol(B Ball) within 3 combined SE
    cfg = ArchimedeanConfig(mc_samples=2**14)
    B = 25.0
    est = OmegaEstimator(QI, B, cfg, rng_seed=3)
    lo, hi = est.support
    h = est.bandwidth
    total = est.integral(lo - h, hi + h)
    vol = cfg.kappa**2 * ball_volume(2) * B**2
    assert abs(total.value - vol) <= 3 * total.stderr + 1e-9 * vol
    # quadrature of point densities over a tiling grid agrees too
    grid = np.arange(lo - h, hi + h, 2 * h) + h
    dens, _ = est.density_many(grid)
    assert float(dens.sum() * 2 * h) == pytest.approx(vol, rel=0.02)


def test_omega_deterministic_given_seed():
    cfg = ArchimedeanConfig(mc_samples=2**12)
    a = omega_density(QI, 200.0, 20.0, cfg, rng_seed=7)
    b = omega_density(QI, 200.0, 20.0, cfg, rng_seed=7)
    assert a == b
    c = omega_density(QI, 200.0, 20.0, cfg, rng_seed=8)
    assert a != c


def test_omega_lipschitz_empirical():
    # |omega(y+h) - omega(y)| <= C h / B^e + 3 * combined SE on a grid
    cfg = ArchimedeanConfig(mc_samples=2**15)
    B = 25.0
    est = OmegaEstimator(QI, B, cfg, rng_seed=5)
    lo, hi = est.support
    h = (hi - lo) / 40
    ys = np.linspace(lo, hi, 41)
    dens, errs = est.density_many(ys)
    C = 40.0  # pilot-observed ratio is ~8; generous margin
    for i in range(len(ys) - 1):
        gap = abs(float(dens[i + 1] - dens[i]))
        assert gap <= C * h / B**2 + 3 * float(errs[i] + errs[i + 1]), i


# -- hat_R ---------------------------------------------------------------


def test_hat_r_consistency(table):
    local = LocalModelConfig(w=10, k_exponent=2)
    arch = ArchimedeanConfig(mc_samples=2**12)
    B = 20.0
    n = B**2 // 2
    got = hat_r(QI, int(n), B, local, arch, table, rng_seed=2)
    expected = float(gamma_w(QI, int(n), local, table)) * omega_density(
        QI, float(n), B, arch, rng_seed=2
    ).value
    assert got == expected
    assert got >= 0
    assert hat_r(QI, 1, 200.0, local, arch, table, rng_seed=2) == 0.0


def test_gamma_w_matches_factored(table):
    local = LocalModelConfig(w=10, k_exponent=3)
    for n in (1, 7, 12, 360):
        assert gamma_w(QI, n, local, table) == gamma_factored(
            QI, [(2, 3), (3, 3), (5, 3), (7, 3)], n
        )


# -- sigma_mod ---------------------------------------------------------------


def brute_sigma(K, f, q):
    count = 0
    import itertools

    for x in itertools.product(range(q), repeat=K.e):
        nx = norm_eval(K, x) % q
        for t in range(q):
            if nx == f.evaluate(t) % q:
                count += 1
    return Fraction(count, q**K.e)


def test_sigma_mod_examples():
    assert sigma_mod(QI, P(1, 0), 12) == 1
    assert sigma_mod(QI, P(1, 0, 0), 4) == Fraction(3, 2)
    assert sigma_mod(QI, P(2, 1), 2) == 1


def test_sigma_mod_vs_brute(table):
    for f in (P(1, 0), P(1, 0, 0), P(1, 0, 1), P(2, 1), P(-1, 0, 0, 0, 22)):
        for q in (2, 3, 4, 5, 6, 8, 9):
            assert sigma_mod(QI, f, q) == brute_sigma(QI, f, q), (f, q)


def test_sigma_mod_crt_multiplicative(table):
    fs = [P(1, 0, 1), P(3, 2, 1), P(-1, 0, 0, 0, 22)]
    pairs = [
        (q1, q2)
        for q1 in range(2, 21)
        for q2 in range(q1 + 1, 400 // q1 + 1)
        if math.gcd(q1, q2) == 1
    ]
    for f in fs:
        for q1, q2 in pairs:
            assert sigma_mod(QI, f, q1 * q2) == sigma_mod(QI, f, q1) * sigma_mod(QI, f, q2)


def test_sigma_mod_budget():
    with pytest.raises(ResourceLimit):
        sigma_mod(QI, P(1, 0), 10**6)
