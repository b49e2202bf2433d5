"""Exact rational arithmetic and the combinatorial coefficients of the weight series.

Everything in this module is computed with :class:`fractions.Fraction`
(aliased as :data:`Rational`), so all results are exact.  Integer-valued
quantities (Stirling numbers, difference-stencil moments) still travel as
``Rational`` because the series coefficients mix them with half-integer
binomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

Rational = Fraction
"""Exact rational number: always reduced, positive denominator."""

__all__ = [
    "Rational",
    "stirling_first",
    "stirling_second",
    "binom_rational",
    "pochhammer",
    "x_coeff",
    "r_coeff",
    "hardy_even_coeff",
    "ConjectureEntry",
    "r_conjecture_check",
]


@lru_cache(maxsize=None)
def _stirling_first_row(n: int) -> tuple[int, ...]:
    # row n of the signed triangle, computed by s(n, k) = s(n-1, k-1) - (n-1) s(n-1, k)
    if n == 0:
        return (1,)
    prev = _stirling_first_row(n - 1)
    row = [0] * (n + 1)
    for k in range(n + 1):
        left = prev[k - 1] if 1 <= k <= n else 0
        right = prev[k] if k < n else 0
        row[k] = left - (n - 1) * right
    return tuple(row)


@lru_cache(maxsize=None)
def _stirling_second_row(n: int) -> tuple[int, ...]:
    # row n of S(n, k), computed by S(n, k) = S(n-1, k-1) + k S(n-1, k)
    if n == 0:
        return (1,)
    prev = _stirling_second_row(n - 1)
    row = [0] * (n + 1)
    for k in range(n + 1):
        left = prev[k - 1] if 1 <= k <= n else 0
        right = prev[k] if k < n else 0
        row[k] = left + k * right
    return tuple(row)


def stirling_first(n: int, k: int) -> Rational:
    """Signed Stirling number of the first kind s(n, k).

    Connects falling factorials to monomials:
    x(x-1)...(x-n+1) = sum_k s(n, k) x^k.  Returns 0 for k < 0 or k > n.
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if k < 0 or k > n:
        return Fraction(0)
    return Fraction(_stirling_first_row(n)[k])


def stirling_second(n: int, k: int) -> Rational:
    """Stirling number of the second kind S(n, k).

    Equals the complete homogeneous sum over multisets,
    S(n, k) = sum 1^{j_1} 2^{j_2} ... k^{j_k} over j_1+...+j_k = n-k,
    which is also the number of partitions of an n-set into k blocks.
    """
    if n < 0 or k < 0:
        raise ValueError(f"n and k must be nonnegative, got ({n}, {k})")
    if k > n:
        return Fraction(0)
    return Fraction(_stirling_second_row(n)[k])


def binom_rational(nu: Rational | int, m: int) -> Rational:
    """Generalized binomial coefficient nu(nu-1)...(nu-m+1)/m! for rational nu."""
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    nu = Fraction(nu)
    num = Fraction(1)
    for i in range(m):
        num *= nu - i
    return num / factorial(m)


def pochhammer(nu: Rational | int, n: int) -> Rational:
    """Rising factorial (nu)_n = nu(nu+1)...(nu+n-1); the empty product is 1."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    nu = Fraction(nu)
    out = Fraction(1)
    for i in range(n):
        out *= nu + i
    return out


@lru_cache(maxsize=None)
def _x_coeff_int(m: int, ell: int) -> int:
    if m == 0:
        # convention: the order-0 moment is declared zero (it vanishes anyway
        # for ell >= 1 by the alternating binomial identity)
        return 0
    total = 0
    for j in range(-ell, ell + 1):
        if j == 0:
            continue  # j^m = 0 for m >= 1
        total += comb(2 * ell, ell + j) * (-1) ** j * j**m
    return total


def x_coeff(m: int, ell: int) -> Rational:
    """Signed m-th moment of the order-2ell alternating binomial stencil.

    X_m = sum_{j=-ell..ell} C(2ell, ell+j) (-1)^j j^m.  Vanishes for odd m
    and for all m < 2ell; X_{2ell} = (-1)^ell (2ell)!.
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    return Fraction(_x_coeff_int(m, ell))


@lru_cache(maxsize=None)
def r_coeff(k: int, ell: int) -> Rational:
    """Exact coefficient of 1/n^k in the series expansion of the optimal weight.

    r_k = sum_{m=2ell..k} C(ell+m-k-1/2, m) s(ell, ell+m-k) X_m, starting at
    k = 2ell.  Strictly positive for ell >= 2; for ell = 1 the odd-index
    coefficients vanish.
    """
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    if k < 2 * ell:
        raise ValueError(f"k must be at least 2*ell = {2 * ell}, got {k}")
    total = Fraction(0)
    for m in range(2 * ell, k + 1):
        s = stirling_first(ell, ell + m - k)
        if s == 0:
            continue
        x = x_coeff(m, ell)
        if x == 0:
            continue
        total += binom_rational(Fraction(2 * ell + 2 * m - 2 * k - 1, 2), m) * s * x
    return total


def hardy_even_coeff(k: int) -> Rational:
    """Closed form for the even series coefficients in the ell = 1 (Hardy) case.

    Returns the coefficient of 1/n^{2k}: C(4k, 2k) / (2^{4k-1} (4k-1)), k >= 1.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    return Fraction(comb(4 * k, 2 * k), 2 ** (4 * k - 1) * (4 * k - 1))


@dataclass(frozen=True)
class ConjectureEntry:
    """One row of the integrality scan of the rescaled series coefficients."""

    k: int
    scaled: Rational  # 4^(k-ell) * r_k
    is_integer: bool


def r_conjecture_check(ell: int, k_max: int) -> list[ConjectureEntry]:
    """Scan whether 4^(k-ell) r_k is an integer for every k in [2ell, k_max].

    The integrality is conjectural; this reports counterexamples rather than
    assuming them away.
    """
    if ell < 2:
        raise ValueError(f"ell must be at least 2, got {ell}")
    if k_max < 2 * ell:
        raise ValueError(f"k_max must be at least 2*ell = {2 * ell}, got {k_max}")
    out = []
    for k in range(2 * ell, k_max + 1):
        scaled = Fraction(4) ** (k - ell) * r_coeff(k, ell)
        out.append(ConjectureEntry(k, scaled, scaled.denominator == 1))
    return out
