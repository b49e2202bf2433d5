"""Configurable-precision binary floating values backed by MPFR (via gmpy2).

:class:`Real` carries an explicit significand precision.  Arithmetic and
square root are correctly rounded at the result precision, which is the
minimum of the operands' precisions; exact operands (int, Fraction, float)
do not lower it.  Internal heavy loops elsewhere in the package work with
raw ``mpfr`` values under explicit contexts and only wrap final results.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

import gmpy2
from gmpy2 import mpfr, mpq

DEFAULT_PRECISION = 128
MIN_PRECISION = 64
MAX_PRECISION = 1024

_Exact = Union[int, float, Fraction]

__all__ = [
    "Real",
    "DEFAULT_PRECISION",
    "MIN_PRECISION",
    "MAX_PRECISION",
    "validate_precision",
    "context",
    "to_mpfr",
    "exact_to_mpfr",
]


def validate_precision(precision: int) -> int:
    if not MIN_PRECISION <= precision <= MAX_PRECISION:
        raise ValueError(
            f"precision must be in [{MIN_PRECISION}, {MAX_PRECISION}], got {precision}"
        )
    return precision


def context(precision: int):
    """gmpy2 context with the given significand precision (round-to-nearest)."""
    return gmpy2.context(precision=precision)


def exact_to_mpfr(value: _Exact | str, precision: int) -> mpfr:
    """Round an exact number (or decimal string) to ``precision`` bits."""
    if isinstance(value, Fraction):
        return mpfr(mpq(value.numerator, value.denominator), precision)
    return mpfr(value, precision)


def to_mpfr(value, precision: int) -> mpfr:
    """Coerce Real / mpfr / exact values to an mpfr rounded at ``precision``."""
    if isinstance(value, Real):
        return mpfr(value.value, precision)
    if isinstance(value, mpfr):
        return mpfr(value, precision)
    return exact_to_mpfr(value, precision)


class Real:
    """Binary floating value with declared significand precision."""

    __slots__ = ("_value", "_precision")

    def __init__(self, value, precision: int | None = None):
        if isinstance(value, Real):
            precision = value.precision if precision is None else validate_precision(precision)
            self._value = mpfr(value.value, precision)
        else:
            if precision is None:
                precision = DEFAULT_PRECISION
            else:
                validate_precision(precision)
            if isinstance(value, mpfr):
                self._value = mpfr(value, precision)
            else:
                self._value = exact_to_mpfr(value, precision)
        self._precision = precision

    @property
    def value(self) -> mpfr:
        return self._value

    @property
    def precision(self) -> int:
        return self._precision

    # -- arithmetic ---------------------------------------------------------

    def _operands(self, other) -> tuple[mpfr, object, int]:
        """Return (self value, other value, result precision)."""
        if isinstance(other, Real):
            return self._value, other._value, min(self._precision, other._precision)
        if isinstance(other, (int, float, mpfr)):
            return self._value, other, self._precision
        if isinstance(other, Fraction):
            return self._value, mpq(other.numerator, other.denominator), self._precision
        return self._value, NotImplemented, self._precision

    def _binary(self, other, op, swap=False):
        a, b, prec = self._operands(other)
        if b is NotImplemented:
            return NotImplemented
        with context(prec):
            res = op(b, a) if swap else op(a, b)
        return Real(res, prec)

    def __add__(self, other):
        return self._binary(other, gmpy2.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, gmpy2.sub)

    def __rsub__(self, other):
        return self._binary(other, gmpy2.sub, swap=True)

    def __mul__(self, other):
        return self._binary(other, gmpy2.mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, gmpy2.div)

    def __rtruediv__(self, other):
        return self._binary(other, gmpy2.div, swap=True)

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            with context(self._precision):
                return Real(self._value**exponent, self._precision)
        if isinstance(exponent, Fraction):
            with context(self._precision):
                return Real(self._value ** mpq(exponent.numerator, exponent.denominator),
                            self._precision)
        return NotImplemented

    def __neg__(self):
        # gmpy2 negation rounds at the *ambient* context; pin it explicitly
        with context(self._precision):
            return Real(-self._value, self._precision)

    def __abs__(self):
        with context(self._precision):
            return Real(abs(self._value), self._precision)

    def sqrt(self) -> "Real":
        if self._value < 0:
            raise ValueError(f"square root of negative value {self._value}")
        with context(self._precision):
            return Real(gmpy2.sqrt(self._value), self._precision)

    # -- comparisons (by value, precision-agnostic) --------------------------

    def _cmp_value(self, other):
        if isinstance(other, Real):
            return other._value
        if isinstance(other, (int, float, mpfr)):
            return other
        if isinstance(other, Fraction):
            return mpq(other.numerator, other.denominator)
        return NotImplemented

    def __eq__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is NotImplemented else self._value == v

    def __lt__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is NotImplemented else self._value < v

    def __le__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is NotImplemented else self._value <= v

    def __gt__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is NotImplemented else self._value > v

    def __ge__(self, other):
        v = self._cmp_value(other)
        return NotImplemented if v is NotImplemented else self._value >= v

    def __hash__(self):
        return hash(self._value)

    # -- conversions / formatting --------------------------------------------

    def __float__(self) -> float:
        return float(self._value)

    def is_zero(self) -> bool:
        return gmpy2.is_zero(self._value)

    def decimal(self) -> str:
        """Shortest decimal string that round-trips at this precision."""
        digits = int(self._precision * 0.3010299956639812) + 2
        s = format(self._value, f".{digits}g")
        # try to trim: drop digits while the round-trip is preserved
        for d in range(1, digits):
            cand = format(self._value, f".{d}g")
            if mpfr(cand, self._precision) == self._value:
                return cand
        return s

    def hexfloat(self) -> str:
        """Hexadecimal (bit-exact) representation."""
        return format(self._value, "a")

    def __repr__(self) -> str:
        return f"Real('{self.decimal()}', {self._precision})"

    def __str__(self) -> str:
        return self.decimal()
