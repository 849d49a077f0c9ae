"""Dense univariate polynomial arithmetic and factorisation over F_p.

Polynomials are lists of ints in [0, p), ascending degree (c[i] is the
coefficient of x^i); the zero polynomial is [].  Factorisation runs
squarefree decomposition, then distinct-degree splitting, then a
Cantor-Zassenhaus equal-degree split seeded with a fixed internal seed so
results are deterministic.
"""

from __future__ import annotations

import random

from .errors import InvalidArgument

_CZ_SEED = 0xC0FFEE


def gf_trim(f: list[int]) -> list[int]:
    while f and f[-1] == 0:
        f.pop()
    return f


def gf_from_int_coeffs(coeffs_desc, p: int) -> list[int]:
    """Reduce integer coefficients (leading first) mod p, ascending order."""
    return gf_trim([c % p for c in reversed(coeffs_desc)])


def gf_degree(f: list[int]) -> int:
    return len(f) - 1


def gf_add(f, g, p):
    n = max(len(f), len(g))
    out = [0] * n
    for i, c in enumerate(f):
        out[i] = c
    for i, c in enumerate(g):
        out[i] = (out[i] + c) % p
    return gf_trim(out)


def gf_sub(f, g, p):
    n = max(len(f), len(g))
    out = [0] * n
    for i, c in enumerate(f):
        out[i] = c
    for i, c in enumerate(g):
        out[i] = (out[i] - c) % p
    return gf_trim(out)


def gf_mul(f, g, p):
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return gf_trim(out)


def gf_divmod(f, g, p):
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    f = list(f)
    dg = gf_degree(g)
    inv = pow(g[-1], p - 2, p)
    quo = [0] * max(0, len(f) - dg)
    while gf_degree(f) >= dg and f:
        shift = gf_degree(f) - dg
        c = f[-1] * inv % p
        quo[shift] = c
        for i, b in enumerate(g):
            f[shift + i] = (f[shift + i] - c * b) % p
        gf_trim(f)
    return gf_trim(quo), f


def gf_mod(f, g, p):
    return gf_divmod(f, g, p)[1]


def gf_monic(f, p):
    if not f:
        return f
    inv = pow(f[-1], p - 2, p)
    return [c * inv % p for c in f]


def gf_gcd(f, g, p):
    while g:
        f, g = g, gf_mod(f, g, p)
    return gf_monic(f, p)


def gf_pow_mod(f, n: int, mod, p):
    out = [1]
    f = gf_mod(f, mod, p)
    while n:
        if n & 1:
            out = gf_mod(gf_mul(out, f, p), mod, p)
        f = gf_mod(gf_mul(f, f, p), mod, p)
        n >>= 1
    return out


def gf_deriv(f, p):
    return gf_trim([i * c % p for i, c in enumerate(f)][1:])


def gf_eval(f, x, p):
    acc = 0
    for c in reversed(f):
        acc = (acc * x + c) % p
    return acc


def _squarefree_parts(f, p):
    """Yield (squarefree factor, multiplicity) for monic f."""
    if gf_degree(f) < 1:
        return
    d = gf_deriv(f, p)
    if not d:
        # f = g(x^p) = g(x)^p in F_p[x]
        g = gf_trim([f[i] for i in range(0, len(f), p)])
        for part, mult in _squarefree_parts(g, p):
            yield part, mult * p
        return
    c = gf_gcd(f, d, p)
    w = gf_divmod(f, c, p)[0]
    i = 1
    while gf_degree(w) > 0:
        y = gf_gcd(w, c, p)
        z = gf_divmod(w, y, p)[0]
        if gf_degree(z) > 0:
            yield z, i
        w = y
        c = gf_divmod(c, y, p)[0]
        i += 1
    # what is left of c has all multiplicities divisible by p; its
    # derivative vanishes, so the recursion lands in the p-th root branch
    if gf_degree(c) > 0:
        yield from _squarefree_parts(c, p)


def _distinct_degree(f, p):
    """Split squarefree monic f into (product of degree-d irreducibles, d)."""
    out = []
    h = [0, 1]  # x
    d = 0
    rest = f
    while gf_degree(rest) > 2 * d:
        d += 1
        h = gf_pow_mod(h, p, rest, p)
        g = gf_gcd(gf_sub(h, [0, 1], p), rest, p)
        if gf_degree(g) > 0:
            out.append((g, d))
            rest = gf_divmod(rest, g, p)[0]
            h = gf_mod(h, rest, p)
    if gf_degree(rest) > 0:
        out.append((rest, gf_degree(rest)))
    return out


def _equal_degree(f, d, p, rng):
    """All monic irreducible factors of f, a product of degree-d factors."""
    n = gf_degree(f)
    if n == d:
        return [gf_monic(f, p)]
    while True:
        r = [rng.randrange(p) for _ in range(n)]
        r = gf_trim(r)
        if gf_degree(r) < 1:
            continue
        g = gf_gcd(r, f, p)
        if 0 < gf_degree(g) < n:
            break
        if p == 2:
            t = list(r)
            acc = list(r)
            for _ in range(d - 1):
                t = gf_mod(gf_mul(t, t, p), f, p)
                acc = gf_add(acc, t, p)
            g = gf_gcd(acc, f, p)
        else:
            s = gf_pow_mod(r, (p**d - 1) // 2, f, p)
            g = gf_gcd(gf_sub(s, [1], p), f, p)
        if 0 < gf_degree(g) < n:
            break
    rest = gf_divmod(f, g, p)[0]
    return _equal_degree(g, d, p, rng) + _equal_degree(rest, d, p, rng)


def factor_mod(coeffs_desc, p: int) -> list[tuple[list[int], int]]:
    """Factor f mod p into monic irreducibles: [(factor, multiplicity)].

    coeffs_desc are integer coefficients, leading first.  The reduction of
    f mod p must be nonzero.  Output is sorted for determinism.
    """
    f = gf_from_int_coeffs(coeffs_desc, p)
    if not f:
        raise InvalidArgument(f"polynomial vanishes identically mod {p}")
    rng = random.Random(_CZ_SEED)
    out = []
    for sf, mult in _squarefree_parts(gf_monic(f, p), p):
        for prod, d in _distinct_degree(sf, p):
            for irr in _equal_degree(prod, d, p, rng):
                out.append((irr, mult))
    out.sort(key=lambda t: (gf_degree(t[0]), t[0], t[1]))
    return out


def irreducible_factor_degrees(coeffs_desc, p: int) -> list[int]:
    """Degrees (with multiplicity) of the irreducible factors of f mod p."""
    return sorted(gf_degree(f) for f, mult in factor_mod(coeffs_desc, p) for _ in range(mult))
