"""Exact integer polynomials, coefficient cubes, and root counts mod q.

Polynomials are immutable, stored leading-coefficient first, as in
f(t) = c0*t^d + c1*t^(d-1) + ... + cd, with arbitrary-precision integer
coefficients; evaluation is exact for any integer argument.

Root counting modulo prime powers proceeds level by level: the solution
set mod p^j is lifted to mod p^(j+1) by testing all p candidate lifts of
each solution, which handles singular roots uniformly.  A Hensel fast path
(`root_count_hensel`) is provided as an optimisation and is tested against
the exhaustive path.
"""

from __future__ import annotations

import itertools
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from . import modpoly
from .arith import SieveTable, factor
from .errors import InvalidArgument, Unsupported

_MAX_IRRED_DEGREE = 8


class IntPolynomial:
    """f(t) = c0*t^d + ... + cd with exact integer coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [int(c) for c in coeffs]
        if not cs:
            raise InvalidArgument("empty coefficient list")
        while len(cs) > 1 and cs[0] == 0:
            cs.pop(0)
        self.coeffs = tuple(cs)

    # -- structure ---------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0,)

    @property
    def leading(self) -> int:
        return self.coeffs[0]

    def __eq__(self, other):
        return isinstance(other, IntPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"IntPolynomial({list(self.coeffs)})"

    def __str__(self):
        return format_poly(self)

    # -- arithmetic ---------------------------------------------------------

    def evaluate(self, n: int) -> int:
        acc = 0
        for c in self.coeffs:
            acc = acc * n + c
        return acc

    __call__ = evaluate

    def evaluate_mod(self, n: int, q: int) -> int:
        acc = 0
        for c in self.coeffs:
            acc = (acc * n + c) % q
        return acc

    def derivative(self) -> "IntPolynomial":
        d = self.degree
        if d == 0:
            return IntPolynomial([0])
        return IntPolynomial([c * (d - i) for i, c in enumerate(self.coeffs[:-1])])

    def content(self) -> int:
        if self.is_zero:
            raise InvalidArgument("content of the zero polynomial")
        return math.gcd(*self.coeffs) if len(self.coeffs) > 1 else abs(self.coeffs[0])

    def primitive_part(self) -> "IntPolynomial":
        h = self.content()
        return IntPolynomial([c // h for c in self.coeffs])

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        if self.is_zero or other.is_zero:
            return IntPolynomial([0])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPolynomial(out)

    def __neg__(self):
        return IntPolynomial([-c for c in self.coeffs])

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> list[int]:
        return list(self.coeffs)

    @classmethod
    def from_json(cls, data) -> "IntPolynomial":
        return cls(data)


def evaluate(f: IntPolynomial, n: int) -> int:
    """Exact f(n) by Horner evaluation."""
    return f.evaluate(n)


def content(f: IntPolynomial) -> int:
    return f.content()


# ---------------------------------------------------------------------------
# parsing / printing


_TERM_RE = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coeff>\d+)\s*\*?\s*)?
        (?:(?P<var>t)(?:\s*\^\s*(?P<exp>\d+))?)?\s*""",
    re.VERBOSE,
)


def format_poly(f: IntPolynomial, var: str = "t") -> str:
    """Render as "c0*t^d + ... + cd" (zero coefficients skipped)."""
    d = f.degree
    if f.is_zero:
        return "0"
    parts = []
    for i, c in enumerate(f.coeffs):
        if c == 0:
            continue
        k = d - i
        mag = abs(c)
        if k == 0:
            body = str(mag)
        elif k == 1:
            body = f"{var}" if mag == 1 else f"{mag}*{var}"
        else:
            body = f"{var}^{k}" if mag == 1 else f"{mag}*{var}^{k}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts)


def parse_poly(text: str, var: str = "t") -> IntPolynomial:
    """Parse "c0*t^d + ... + cd" style strings (liberal about 1*, spaces)."""
    text = text.strip()
    if not text:
        raise InvalidArgument("empty polynomial string")
    if text == "0":
        return IntPolynomial([0])
    coeffs: dict[int, int] = {}
    pos = 0
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m or m.end() == pos:
            raise InvalidArgument(f"cannot parse polynomial near {text[pos:pos+12]!r}")
        sign = -1 if m.group("sign") == "-" else 1
        coeff = m.group("coeff")
        has_var = m.group("var") is not None
        if coeff is None and not has_var:
            raise InvalidArgument(f"cannot parse polynomial near {text[pos:pos+12]!r}")
        c = int(coeff) if coeff is not None else 1
        k = int(m.group("exp")) if m.group("exp") else (1 if has_var else 0)
        coeffs[k] = coeffs.get(k, 0) + sign * c
        pos = m.end()
    d = max(coeffs)
    return IntPolynomial([coeffs.get(k, 0) for k in range(d, -1, -1)])


# ---------------------------------------------------------------------------
# discriminant via the Sylvester resultant


def _bareiss_det(mat: list[list[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    n = len(mat)
    if n == 0:
        return 1
    m = [row[:] for row in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def sylvester_matrix(f: IntPolynomial, g: IntPolynomial) -> list[list[int]]:
    df, dg = f.degree, g.degree
    n = df + dg
    rows = []
    for i in range(dg):
        rows.append([0] * i + list(f.coeffs) + [0] * (n - df - 1 - i))
    for i in range(df):
        rows.append([0] * i + list(g.coeffs) + [0] * (n - dg - 1 - i))
    return rows


def resultant(f: IntPolynomial, g: IntPolynomial) -> int:
    if f.is_zero or g.is_zero:
        raise InvalidArgument("resultant of the zero polynomial")
    if f.degree == 0:
        return f.coeffs[0] ** g.degree
    if g.degree == 0:
        return g.coeffs[0] ** f.degree
    return _bareiss_det(sylvester_matrix(f, g))


def discriminant(f: IntPolynomial) -> int:
    """disc(f) = (-1)^(d(d-1)/2) Res(f, f') / lc(f);  1 for degree <= 1."""
    if f.is_zero:
        raise InvalidArgument("discriminant of the zero polynomial")
    d = f.degree
    if d <= 1:
        return 1
    res = resultant(f, f.derivative())
    sign = -1 if (d * (d - 1) // 2) % 2 else 1
    q, r = divmod(sign * res, f.leading)
    assert r == 0
    return q


# ---------------------------------------------------------------------------
# irreducibility over Q (rational roots, factor-degree filter, Kronecker)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = []
    for i in range(1, math.isqrt(n) + 1):
        if n % i == 0:
            out.append(i)
            if i != n // i:
                out.append(n // i)
    return sorted(out)


def _has_rational_root(f: IntPolynomial) -> bool:
    # candidate roots p/q with p | constant term, q | leading (f primitive)
    const = f.coeffs[-1]
    if const == 0:
        return True  # t divides f
    for pnum in _divisors(const):
        for qden in _divisors(f.leading):
            if math.gcd(pnum, qden) != 1:
                continue
            for s in (pnum, -pnum):
                # q^d f(s/q) = sum c_i s^(d-i) q^i
                acc = 0
                d = f.degree
                for i, c in enumerate(f.coeffs):
                    acc += c * s ** (d - i) * qden**i
                if acc == 0:
                    return True
    return False


def _kronecker_factor_exists(f: IntPolynomial, m: int) -> bool:
    """Search for a degree-m factor via divisor interpolation; exact."""
    d = f.degree
    points = []
    t = 0
    while len(points) < d + 1:
        points.append(t)
        t = -t if t > 0 else -t + 1
    values = [(abs(f.evaluate(t)), t) for t in points]
    values.sort()
    sample = [(t, f.evaluate(t)) for _, t in values[: m + 1]]
    ts = [t for t, _ in sample]
    divisor_lists = []
    for idx, (_, v) in enumerate(sample):
        ds = _divisors(v)
        if idx == 0:
            divisor_lists.append(ds)  # sign normalised: g and -g equivalent
        else:
            divisor_lists.append([x for dd in ds for x in (dd, -dd)])
    # Lagrange denominators
    denoms = []
    for i, ti in enumerate(ts):
        den = 1
        for j, tj in enumerate(ts):
            if i != j:
                den *= ti - tj
        denoms.append(den)
    for combo in itertools.product(*divisor_lists):
        # interpolate candidate g with g(ts[i]) = combo[i]
        coeffs = [Fraction(0)] * (m + 1)  # ascending
        ok = True
        for i, (ti, vi) in enumerate(zip(ts, combo)):
            basis = [Fraction(1)]
            for j, tj in enumerate(ts):
                if j == i:
                    continue
                new = [Fraction(0)] * (len(basis) + 1)
                for k, b in enumerate(basis):
                    new[k] -= b * tj
                    new[k + 1] += b
                basis = new
            w = Fraction(vi, denoms[i])
            for k, b in enumerate(basis):
                coeffs[k] += w * b
        g_desc = []
        for c in reversed(coeffs):
            if c.denominator != 1:
                ok = False
                break
            g_desc.append(int(c))
        if not ok:
            continue
        g = IntPolynomial(g_desc)
        if g.degree != m or g.is_zero:
            continue
        quo = _exact_poly_divide(f, g)
        if quo is not None:
            return True
    return False


def _exact_poly_divide(f: IntPolynomial, g: IntPolynomial):
    """f / g over Q if the division is exact with integer quotient * unit."""
    if g.is_zero or g.degree == 0:
        return None
    rem = list(f.coeffs)
    quo = []
    gl = g.leading
    while len(rem) - 1 >= g.degree and any(rem):
        if rem[0] % gl != 0:
            return None
        q = rem[0] // gl
        quo.append(q)
        for i, c in enumerate(g.coeffs):
            rem[i] -= q * c
        if rem[0] != 0:
            return None
        rem.pop(0)
    if any(rem):
        return None
    return IntPolynomial(quo) if quo else None


def is_irreducible_over_q(f: IntPolynomial) -> bool:
    """Irreducibility of f/content(f) in Q[t]; degree must be 1..8."""
    if f.is_zero or f.degree == 0:
        raise Unsupported("irreducibility needs degree >= 1")
    if f.degree > _MAX_IRRED_DEGREE:
        raise Unsupported(f"irreducibility capped at degree {_MAX_IRRED_DEGREE}")
    g = f.primitive_part()
    d = g.degree
    if d == 1:
        return True
    if discriminant(g) == 0:
        return False  # repeated factor in char 0
    if _has_rational_root(g):
        return False
    if d <= 3:
        return True
    # factor-degree filter: possible Q-factor degrees are subset sums of the
    # mod-p factor degree pattern, for any good prime p
    possible = set(range(2, d // 2 + 1))
    disc = discriminant(g)
    used = 0
    for p in (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53):
        if g.leading % p == 0 or disc % p == 0:
            continue
        degs = modpoly.irreducible_factor_degrees(g.coeffs, p)
        if len(degs) == 1:
            return True  # irreducible mod p, p good: irreducible over Q
        sums = {0}
        for dd in degs:
            sums |= {s + dd for s in sums}
        possible &= sums
        used += 1
        if not possible or used >= 4:
            break
    if not possible:
        return True
    for m in sorted(possible):
        if _kronecker_factor_exists(g, m):
            return False
    return True


# ---------------------------------------------------------------------------
# root counting modulo q


def count_roots_mod_p(f: IntPolynomial, p: int) -> int:
    """#{u in F_p : f(u) = 0}, by direct scan with reduced coefficients."""
    cs = [c % p for c in f.coeffs]
    if not any(cs):
        return p
    count = 0
    for u in range(p):
        acc = 0
        for c in cs:
            acc = (acc * u + c) % p
        if acc == 0:
            count += 1
    return count


def _roots_mod_prime_power(f: IntPolynomial, p: int, k: int) -> list[int]:
    """All roots of f mod p^k by exhaustive level-by-level lifting."""
    sols = [u for u in range(p) if f.evaluate_mod(u, p) == 0]
    if not any(c % p for c in f.coeffs):
        sols = list(range(p))
    q = p
    for _ in range(k - 1):
        q_next = q * p
        nxt = []
        for u in sols:
            for c in range(p):
                v = u + c * q
                if f.evaluate_mod(v, q_next) == 0:
                    nxt.append(v)
        sols = nxt
        q = q_next
    return sols


def root_count_prime_power(f: IntPolynomial, p: int, k: int) -> int:
    return len(_roots_mod_prime_power(f, p, k))


def root_count(f: IntPolynomial, q: int, table: SieveTable | None = None) -> int:
    """lambda_f(q) = #{u mod q : f(u) = 0 mod q}, multiplicative in q."""
    if q <= 0:
        raise InvalidArgument(f"modulus must be positive, got {q}")
    if f.is_zero:
        raise InvalidArgument("root count of the zero polynomial")
    if q == 1:
        return 1
    out = 1
    for p, k in factor(q, table).factors:
        out *= root_count_prime_power(f, p, k)
        if out == 0:
            return 0
    return out


def root_count_hensel(f: IntPolynomial, q: int, table: SieveTable | None = None) -> int:
    """Fast path: non-singular roots mod p lift uniquely (Hensel)."""
    if q <= 0:
        raise InvalidArgument(f"modulus must be positive, got {q}")
    if f.is_zero:
        raise InvalidArgument("root count of the zero polynomial")
    if q == 1:
        return 1
    fp = f.derivative()
    out = 1
    for p, k in factor(q, table).factors:
        if k == 1:
            out *= count_roots_mod_p(f, p)
            continue
        count = 0
        singular = []
        for u in range(p):
            if f.evaluate_mod(u, p) != 0:
                continue
            if fp.evaluate_mod(u, p) != 0:
                count += 1  # exactly one root above u mod p^k
            else:
                singular.append(u)
        # singular roots: fall back to exhaustive lifting of those branches
        qq = p
        sols = singular
        for _ in range(k - 1):
            q_next = qq * p
            sols = [
                u + c * qq
                for u in sols
                for c in range(p)
                if f.evaluate_mod(u + c * qq, q_next) == 0
            ]
            qq = q_next
        out *= count + len(sols)
        if out == 0:
            return 0
    return out


# ---------------------------------------------------------------------------
# combinatorial cubes of coefficient vectors


CoefficientVector = tuple[int, ...]


@dataclass
class CombinatorialCube:
    """Coefficient vectors (a0..ad), |ai| <= H, with fixed coordinates.

    Index d is the constant coefficient.  Vectors map to polynomials via
    a0*t^d + ... + ad.
    """

    d: int
    H: int
    fixed: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 0 or self.H < 1:
            raise InvalidArgument("cube needs d >= 0 and H >= 1")
        for e, a in self.fixed.items():
            if not 0 <= e <= self.d:
                raise InvalidArgument(f"fixed index {e} outside 0..{self.d}")
            if abs(a) > self.H:
                raise InvalidArgument(f"fixed value {a} outside [-H, H]")
        if self.fixed.get(self.d) == 0:
            warnings.warn(
                "cube fixes the constant coefficient to 0: every polynomial "
                "in it is divisible by t",
                stacklevel=2,
            )

    @property
    def dimension(self) -> int:
        return self.d + 1 - len(self.fixed)

    def contains(self, vec: CoefficientVector) -> bool:
        if len(vec) != self.d + 1:
            return False
        if any(abs(a) > self.H for a in vec):
            return False
        return all(vec[e] == a for e, a in self.fixed.items())

    def sample(self, rng) -> CoefficientVector:
        return cube_sample(self, rng)

    def to_json(self) -> dict:
        return {"d": self.d, "H": self.H, "fixed": {str(e): a for e, a in self.fixed.items()}}

    @classmethod
    def from_json(cls, data: dict) -> "CombinatorialCube":
        return cls(
            d=int(data["d"]),
            H=int(data["H"]),
            fixed={int(e): int(a) for e, a in data.get("fixed", {}).items()},
        )


def cube_sample(cube: CombinatorialCube, rng) -> CoefficientVector:
    """Uniform element of the cube; rng is a numpy Generator."""
    vec = []
    for e in range(cube.d + 1):
        if e in cube.fixed:
            vec.append(cube.fixed[e])
        else:
            vec.append(int(rng.integers(-cube.H, cube.H + 1)))
    return tuple(vec)
