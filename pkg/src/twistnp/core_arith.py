"""Exact integer and rational building blocks.

Everything here is exact: Python ints, ``fractions.Fraction``, and an
infinity sentinel for the minimal-representation function.  No floats ever
enter a value that is later asserted on.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

#: Sentinel for "no representation exists".  Only ever compared, never
#: used in arithmetic with exact values.
INFINITY = math.inf


def min_residue(x: int, d: int) -> int:
    """Minimal non-negative residue of ``x`` modulo ``d``."""
    if d < 1:
        raise ValueError(f"modulus must be positive, got {d}")
    return x % d


def mod_inverse(e: int, d: int) -> int:
    """Inverse of ``e`` modulo ``d``, in ``[1, d)`` (0 when d == 1)."""
    if d < 1:
        raise ValueError(f"modulus must be positive, got {d}")
    if math.gcd(e, d) != 1:
        raise ValueError(f"{e} is not invertible modulo {d}")
    return pow(e, -1, d)


def falling_factorial(x: int | Fraction, n: int) -> Fraction:
    """x(x-1)...(x-n+1) with n factors; n = 0 gives 1."""
    if n < 0:
        raise ValueError(f"length must be non-negative, got {n}")
    out = Fraction(1)
    xf = Fraction(x)
    for j in range(n):
        out *= xf - j
    return out


def factorial_inv_or_zero(k: int) -> Fraction:
    """1/k! for k >= 0, and 0 for negative k.

    The zero branch is what makes permutation sums over non-representable
    decompositions vanish without special-casing.
    """
    if k < 0:
        return Fraction(0)
    return Fraction(1, math.factorial(k))


def artin_hasse_coeffs(p: int, n_max: int) -> list[Fraction]:
    """Coefficients lambda_0..lambda_{n_max} of exp(sum_i X^{p^i}/p^i).

    Computed by the recurrence n*lambda_n = sum_{p^i <= n} lambda_{n-p^i},
    obtained from E'(X) = E(X) * sum_i X^{p^i - 1}.  Each coefficient is a
    rational with denominator coprime to p.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if p < 2:
        raise ValueError(f"p must be a prime >= 2, got {p}")
    lam = [Fraction(1)]
    for n in range(1, n_max + 1):
        acc = Fraction(0)
        q = 1
        while q <= n:
            acc += lam[n - q]
            q *= p
        lam.append(acc / n)
    return lam


@lru_cache(maxsize=None)
def min_phi(n: int, d: int, e: int) -> int | float:
    """min{x + y : dx + ey = n, x, y >= 0}, or INFINITY if unsolvable.

    When finite this equals (n + (d-e) * min_residue(e^{-1} n, d)) / d: the
    minimum is attained at the smallest admissible y.
    """
    if not (d > e >= 1):
        raise ValueError(f"need d > e >= 1, got d={d}, e={e}")
    if math.gcd(d, e) != 1:
        raise ValueError(f"need gcd(d, e) = 1, got d={d}, e={e}")
    if n < 0:
        return INFINITY
    y = min_residue(mod_inverse(e, d) * n, d)
    x2 = n - e * y
    if x2 < 0:
        return INFINITY
    assert x2 % d == 0
    return x2 // d + y


def phi_minimizer(n: int, d: int, e: int) -> tuple[int, int] | None:
    """The (x, y) attaining min_phi, or None when there is no solution."""
    if min_phi(n, d, e) is INFINITY:
        return None
    y = min_residue(mod_inverse(e, d) * n, d)
    return (n - e * y) // d, y
