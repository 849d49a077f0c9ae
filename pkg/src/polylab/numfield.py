"""Monogenic number fields: norm forms, splitting, exact local densities.

A field is built from a monic irreducible minimal polynomial g of degree e
(2 <= e <= 4) under the assertion that Z[theta] is the full ring of
integers.  The expanded norm form N(x1 + x2*theta + ... + xe*theta^(e-1))
is computed once at construction as the determinant of the
multiplication-by-alpha matrix, which equals Res_t(g(t), x1 + ... + xe t^(e-1))
for monic g.

Local densities rho(p^k, a) are exact integers.  For p^k | a they come from
the closed form

    rho = p^(ke) * (sum_{j >= k} r(p^j)/p^j) * prod_{P | p} (1 - 1/N(P)),

with the tail summed exactly from the generating function
prod_i (1 - x^{f_i})^{-1}.  Otherwise we enumerate at the stabilisation
level m = min(k, alpha + 2*v_p(e) + 1) and scale by p^((e-1)(k-m)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import modpoly
from .arith import SieveTable, factor
from .errors import InvalidArgument, MonogenicityError, ResourceLimit, Unsupported
from .intpoly import IntPolynomial, discriminant, is_irreducible_over_q

_ENUM_BUDGET = 10**8
_CHUNK_ELEMS = 4_000_000


# ---------------------------------------------------------------------------
# symbolic multivariate helpers (dict exponent-tuple -> int)


def _mp_mul(a: dict, b: dict, nvars: int) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(ea[i] + eb[i] for i in range(nvars))
            out[key] = out.get(key, 0) + ca * cb
    return {k: v for k, v in out.items() if v}


def _mp_det(mat: list[list[dict]], nvars: int) -> dict:
    """Determinant by cofactor expansion; entries are small polynomials."""
    n = len(mat)
    if n == 1:
        return dict(mat[0][0])
    out: dict = {}
    for j in range(n):
        entry = mat[0][j]
        if not entry:
            continue
        minor = [[row[i] for i in range(n) if i != j] for row in mat[1:]]
        sub = _mp_det(minor, nvars)
        sign = -1 if j % 2 else 1
        for k, v in _mp_mul(entry, sub, nvars).items():
            out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v}


def norm_expand(g: IntPolynomial) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Expanded norm form of Q[t]/(g) as ((exponents, coefficient), ...).

    Equals Res_t(g(t), x1 + x2 t + ... + xe t^(e-1)) for monic g, computed
    as det of the multiplication matrix of x1 + x2 theta + ... on the power
    basis.  Homogeneous of degree e = deg g.
    """
    e = g.degree
    if e > 4:
        raise Unsupported(f"norm expansion supports degree <= 4, got {e}")
    if e < 2:
        raise InvalidArgument("norm expansion needs degree >= 2")
    if g.leading != 1:
        raise InvalidArgument("minimal polynomial must be monic")
    if not is_irreducible_over_q(g):
        raise InvalidArgument(f"{g} is reducible over Q")
    # companion action: theta * theta^j, columns of C
    tail = [-c for c in g.coeffs[1:][::-1]]  # theta^e = tail[0] + tail[1] theta + ...
    basis_mult = []  # basis_mult[j][i]: coeff of theta^i in theta * theta^j
    for j in range(e):
        if j < e - 1:
            col = [0] * e
            col[j + 1] = 1
        else:
            col = list(tail)
        basis_mult.append(col)
    # powers of theta times x_m as linear forms:
    # M[i][j] = coeff of theta^i in (sum_m x_m theta^(m-1)) * theta^j
    # build coordinates of theta^(m-1) * theta^j for all m
    coords = [[None] * e for _ in range(e)]  # coords[m][j] = theta^m * theta^j as int vec
    for j in range(e):
        vec = [0] * e
        vec[j] = 1
        coords[0][j] = vec
    for m in range(1, e):
        for j in range(e):
            prev = coords[m - 1][j]
            vec = [0] * e
            for i, c in enumerate(prev):
                if c:
                    for ii, cc in enumerate(basis_mult[i]):
                        vec[ii] += c * cc
            coords[m][j] = vec
    unit = lambda m: tuple(1 if i == m else 0 for i in range(e))
    mat = []
    for i in range(e):
        row = []
        for j in range(e):
            entry: dict = {}
            for m in range(e):
                c = coords[m][j][i]
                if c:
                    entry[unit(m)] = entry.get(unit(m), 0) + c
            row.append(entry)
        mat.append(row)
    det = _mp_det(mat, e)
    terms = tuple(sorted((exps, c) for exps, c in det.items()))
    assert all(sum(exps) == e for exps, _ in terms)
    return terms


@dataclass(frozen=True)
class PrimeSplitting:
    """(p) = P_1^{e_1} ... P_r^{e_r} with N(P_i) = p^{f_i}."""

    p: int
    factors: tuple[tuple[int, int], ...]  # (e_i, f_i), sorted

    @property
    def r(self) -> int:
        return len(self.factors)

    def residue_degrees(self) -> list[int]:
        return [f for _, f in self.factors]


class MonogenicField:
    """Number field Q[t]/(g) with power integral basis Z[theta].

    Immutable after construction; the density caches are append-only and
    safe for concurrent reads.
    """

    def __init__(self, g, assert_monogenic: bool = True, name: str | None = None):
        if not isinstance(g, IntPolynomial):
            g = IntPolynomial(g)
        self.g = g
        self.e = g.degree
        self.assert_monogenic = bool(assert_monogenic)
        self.name = name or f"Q[t]/({g})"
        self.disc_g = discriminant(g)
        self.norm_terms = norm_expand(g)
        assert norm_eval(self, (1,) + (0,) * (self.e - 1)) == 1
        self.gradient_terms = tuple(
            tuple(
                (tuple(ex - (1 if j == i else 0) for j, ex in enumerate(exps)), c * exps[i])
                for exps, c in self.norm_terms
                if exps[i] > 0
            )
            for i in range(self.e)
        )
        self._split_cache: dict[int, PrimeSplitting] = {}
        self._rk_cache: dict[tuple[int, int], int] = {}
        self._counts_cache: dict[tuple[int, int], np.ndarray] = {}
        self._rho_zero_cache: dict[tuple[int, int], int] = {}

    def __repr__(self):
        return f"MonogenicField({self.name})"

    def to_json(self) -> dict:
        return {"g": self.g.to_json(), "assert_monogenic": self.assert_monogenic}

    @classmethod
    def from_json(cls, data: dict) -> "MonogenicField":
        return cls(
            IntPolynomial(data["g"]),
            assert_monogenic=bool(data.get("assert_monogenic", False)),
            name=data.get("name"),
        )


def gaussian_field() -> MonogenicField:
    return MonogenicField([1, 0, 1], name="Q(i)")


def sqrt2_field() -> MonogenicField:
    return MonogenicField([1, 0, -2], name="Q(sqrt2)")


def zeta3_field() -> MonogenicField:
    return MonogenicField([1, 1, 1], name="Q(zeta3)")


def cbrt2_field() -> MonogenicField:
    return MonogenicField([1, 0, 0, -2], name="Q(cbrt2)")


PRESET_FIELDS = {
    "gaussian": gaussian_field,
    "sqrt2": sqrt2_field,
    "zeta3": zeta3_field,
    "cbrt2": cbrt2_field,
}


# ---------------------------------------------------------------------------
# norm evaluation


def norm_eval(K: MonogenicField, x) -> int:
    """Exact value of the expanded norm form at an integer vector."""
    if len(x) != K.e:
        raise InvalidArgument(f"norm vector must have length {K.e}")
    total = 0
    for exps, c in K.norm_terms:
        term = c
        for xi, ei in zip(x, exps):
            for _ in range(ei):
                term *= xi
        total += term
    return total


def norm_gradient(K: MonogenicField, x) -> tuple[int, ...]:
    """Exact gradient of the norm form at an integer vector."""
    if len(x) != K.e:
        raise InvalidArgument(f"norm vector must have length {K.e}")
    out = []
    for i in range(K.e):
        total = 0
        for exps, c in K.gradient_terms[i]:
            term = c
            for xi, ei in zip(x, exps):
                for _ in range(ei):
                    term *= xi
            total += term
        out.append(total)
    return tuple(out)


def norm_eval_float(K: MonogenicField, xs: np.ndarray) -> np.ndarray:
    """Float norm values for an (n, e) array of real points."""
    total = np.zeros(xs.shape[0])
    for exps, c in K.norm_terms:
        term = np.full(xs.shape[0], float(c))
        for i, ei in enumerate(exps):
            if ei:
                term *= xs[:, i] ** ei
        total += term
    return total


def mult_mod_g(K: MonogenicField, x, y) -> tuple[int, ...]:
    """Coordinates of (sum x_i theta^(i-1)) * (sum y_i theta^(i-1))."""
    e = K.e
    prod = [0] * (2 * e - 1)
    for i, a in enumerate(x):
        for j, b in enumerate(y):
            prod[i + j] += a * b
    # reduce powers theta^m for m >= e using g (monic)
    gtail = [-c for c in K.g.coeffs[1:][::-1]]
    for m in range(2 * e - 2, e - 1, -1):
        c = prod[m]
        if c:
            prod[m] = 0
            for i, t in enumerate(gtail):
                prod[m - e + i] += c * t
    return tuple(prod[:e])


# ---------------------------------------------------------------------------
# splitting and Dedekind zeta coefficients


def split_prime(K: MonogenicField, p: int) -> PrimeSplitting:
    """Factor (p) via Dedekind's criterion on g mod p."""
    if p in K._split_cache:
        return K._split_cache[p]
    if not K.assert_monogenic and K.disc_g % (p * p) == 0:
        raise MonogenicityError(
            f"p={p}: p^2 divides disc(g) and Z[theta] is not asserted maximal; "
            "the splitting from g mod p may be wrong"
        )
    factors = modpoly.factor_mod(K.g.coeffs, p)
    split = tuple(sorted((mult, modpoly.gf_degree(h)) for h, mult in factors))
    assert sum(e * f for e, f in split) == K.e
    if K.disc_g % p != 0:
        assert all(e == 1 for e, _ in split)
    out = PrimeSplitting(p=p, factors=split)
    K._split_cache[p] = out
    return out


def splitting_table_csv(K: MonogenicField, primes) -> str:
    lines = ["p,e_i,f_i"]
    for p in primes:
        for e_i, f_i in split_prime(K, int(p)).factors:
            lines.append(f"{p},{e_i},{f_i}")
    return "\n".join(lines) + "\n"


def _rk_prime_power(K: MonogenicField, p: int, k: int) -> int:
    """r(p^k): solutions of f_1 m_1 + ... + f_r m_r = k, m_i >= 0."""
    if k == 0:
        return 1
    key = (p, k)
    if key in K._rk_cache:
        return K._rk_cache[key]
    fs = split_prime(K, p).residue_degrees()
    ways = [0] * (k + 1)
    ways[0] = 1
    for f in fs:
        for j in range(f, k + 1):
            ways[j] += ways[j - f]
    for j in range(1, k + 1):
        K._rk_cache[(p, j)] = ways[j]
    return ways[k]


def ideal_count(K: MonogenicField, m: int, table: SieveTable | None = None) -> int:
    """r(m): the number of integral ideals of norm m (multiplicative)."""
    if m < 1:
        raise InvalidArgument("ideal_count needs m >= 1")
    out = 1
    for p, k in factor(m, table).factors:
        out *= _rk_prime_power(K, p, k)
        if out == 0:
            return 0
    return out


# ---------------------------------------------------------------------------
# exact local densities rho(p^k, a) and gamma(q, a)


def norm_residue_counts(K: MonogenicField, q: int, budget: int = _ENUM_BUDGET) -> np.ndarray:
    """counts[r] = #{x in (Z/q)^e : N(x) = r mod q}, by vectorised scan."""
    if q < 1:
        raise InvalidArgument("modulus must be positive")
    e = K.e
    if q**e > budget:
        raise ResourceLimit(f"enumeration q^e = {q}^{e} exceeds budget {budget}")
    if q == 1:
        return np.array([1], dtype=np.int64)
    residues = np.arange(q, dtype=np.int64)
    # pow_tab[j] = residues^j mod q, safe against overflow (q^2 < 2^63 needs
    # q < 3e9; the budget keeps q far below that)
    max_exp = e
    pow_tab = [np.ones(q, dtype=np.int64)]
    for _ in range(max_exp):
        pow_tab.append(pow_tab[-1] * residues % q)
    counts = np.zeros(q, dtype=np.int64)
    rest = q ** (e - 1)
    chunk = max(1, _CHUNK_ELEMS // rest)
    shape_rest = (q,) * (e - 1)
    for start in range(0, q, chunk):
        x1 = residues[start : start + chunk]
        total = np.zeros((len(x1),) + shape_rest, dtype=np.int64)
        for exps, c in K.norm_terms:
            term = np.full((len(x1),) + (1,) * (e - 1), c % q, dtype=np.int64)
            if exps[0]:
                term = term * pow_tab[exps[0]][x1].reshape((-1,) + (1,) * (e - 1)) % q
            for i in range(1, e):
                if exps[i]:
                    shape = [1] * e
                    shape[i] = q
                    term = term * pow_tab[exps[i]].reshape(shape) % q
            total = (total + term) % q
        counts += np.bincount(total.ravel(), minlength=q)
    return counts


def _counts_cached(K: MonogenicField, p: int, m: int) -> np.ndarray:
    key = (p, m)
    arr = K._counts_cache.get(key)
    if arr is None:
        arr = norm_residue_counts(K, p**m)
        K._counts_cache[key] = arr
    return arr


def _rho_divisible(K: MonogenicField, p: int, k: int) -> int:
    """rho(p^k, 0): closed form via the Dedekind coefficient tail."""
    key = (p, k)
    if key in K._rho_zero_cache:
        return K._rho_zero_cache[key]
    fs = split_prime(K, p).residue_degrees()
    x = Fraction(1, p)
    full = Fraction(1)
    for f in fs:
        full /= 1 - x**f
    partial = sum(_rk_prime_power(K, p, j) * x**j for j in range(k))
    tail = full - partial
    local = Fraction(1)
    for f in fs:
        local *= 1 - Fraction(1, p**f)
    val = Fraction(p) ** (k * K.e) * tail * local
    assert val.denominator == 1
    out = int(val)
    K._rho_zero_cache[key] = out
    return out


def _rho_unramified_unit(K: MonogenicField, p: int) -> int:
    """rho(p, b) for any unit b, when p does not divide disc(g).

    The count is independent of the unit class:
    p^(e-1) (1-1/p)^(-1) prod_{P | p} (1 - 1/N(P)), an exact integer.
    """
    fs = split_prime(K, p).residue_degrees()
    val = Fraction(p) ** (K.e - 1) / (1 - Fraction(1, p))
    for f in fs:
        val *= 1 - Fraction(1, p**f)
    assert val.denominator == 1
    return int(val)


def rho(K: MonogenicField, p: int, k: int, a: int) -> int:
    """Exact #{x in (Z/p^k)^e : N(x) = a mod p^k}."""
    if k < 1:
        raise InvalidArgument("rho needs k >= 1")
    q = p**k
    a_red = a % q
    if a_red == 0:
        return _rho_divisible(K, p, k)
    alpha = 0
    t = a_red
    while t % p == 0:
        t //= p
        alpha += 1
    eps = 0
    t = K.e
    while t % p == 0:
        t //= p
        eps += 1
    m = min(k, alpha + 2 * eps + 1)
    if (p**m) ** K.e <= _ENUM_BUDGET:
        counts = _counts_cached(K, p, m)
        base = int(counts[a_red % p**m])
        return base * p ** ((K.e - 1) * (k - m))
    if eps == 0 and K.disc_g % p != 0:
        # beyond the enumeration budget, but p is coprime to e*disc(g):
        # the stabilised value only involves the unit-independent level-1
        # count, so no enumeration is needed
        return _rk_prime_power(K, p, alpha) * _rho_unramified_unit(K, p) * p ** (
            (K.e - 1) * (k - 1)
        )
    raise ResourceLimit(
        f"rho enumeration p^(me) = {p}^{m * K.e} exceeds budget for ramified p"
    )


def gamma_factored(K: MonogenicField, modulus, a: int) -> Fraction:
    """gamma(q, a) = prod rho(p^k, a) / p^{k(e-1)} over factored q.

    `modulus` is a list of (prime, exponent) pairs with distinct primes, so
    that enormous structured moduli never need to be materialised.
    """
    primes_seen = set()
    out = Fraction(1)
    for p, k in modulus:
        if p in primes_seen:
            raise InvalidArgument(f"repeated prime {p} in factored modulus")
        primes_seen.add(p)
        out *= Fraction(rho(K, p, k, a), p ** (k * (K.e - 1)))
    return out


def gamma(K: MonogenicField, q: int, a: int, table: SieveTable | None = None) -> Fraction:
    """gamma(q, a) for a plain modulus q >= 1."""
    if q < 1:
        raise InvalidArgument("modulus must be positive")
    return gamma_factored(K, factor(q, table).factors, a)
