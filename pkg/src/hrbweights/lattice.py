"""Integer-indexed sequences and the first-difference operator algebra.

Two sequence types: :class:`LatticeSeq` (an evaluation rule on all of Z with
a declared support floor) and :class:`FinSuppSeq` (finitely supported test
vectors).  Difference operators are represented by :class:`DiffExpr`, an
exact rational stencil ``{offset: coefficient}``; composing operators
convolves stencils, so identities like div o grad = lap hold exactly at the
stencil level.

:func:`apply_taps_accurate` evaluates a stencil against an evaluation rule
with adaptive working precision, so that high-order differences of smooth
sequences (which cancel catastrophically) still come out accurate to a
requested number of bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .mpreal import DEFAULT_PRECISION, Real, context, to_mpfr

__all__ = [
    "DiffExpr",
    "FinSuppSeq",
    "LatticeSeq",
    "shift",
    "grad",
    "divg",
    "lap",
    "midop",
    "divg_pow",
    "neg_lap_pow",
    "half_power",
    "quad_form",
    "pointwise_mul",
    "leibniz_div_pow",
    "PowerFunc",
    "discrete_mvt_bounds",
    "apply_taps_accurate",
    "taps_sign",
]


# ---------------------------------------------------------------------------
# stencil algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffExpr:
    """A translation-invariant difference operator as an exact stencil.

    ``taps`` maps relative offset to rational coefficient:
    (A u)(n) = sum_i taps[i] * u(n + i).
    """

    taps: tuple[tuple[int, Fraction], ...]

    @staticmethod
    def _from_dict(d: dict[int, Fraction]) -> "DiffExpr":
        items = tuple(sorted((o, c) for o, c in d.items() if c != 0))
        return DiffExpr(items)

    @classmethod
    def identity(cls) -> "DiffExpr":
        return cls._from_dict({0: Fraction(1)})

    @classmethod
    def shift(cls, k: int) -> "DiffExpr":
        return cls._from_dict({k: Fraction(1)})

    @classmethod
    def grad(cls) -> "DiffExpr":
        # (grad u)(n) = u(n) - u(n-1)
        return cls._from_dict({0: Fraction(1), -1: Fraction(-1)})

    @classmethod
    def divg(cls) -> "DiffExpr":
        # (div u)(n) = u(n+1) - u(n)
        return cls._from_dict({1: Fraction(1), 0: Fraction(-1)})

    @classmethod
    def lap(cls) -> "DiffExpr":
        # (lap u)(n) = u(n-1) - 2 u(n) + u(n+1)
        return cls._from_dict({-1: Fraction(1), 0: Fraction(-2), 1: Fraction(1)})

    @classmethod
    def neg_lap(cls) -> "DiffExpr":
        return cls.lap().scaled(-1)

    @classmethod
    def midop(cls) -> "DiffExpr":
        # (M u)(n) = (u(n) + u(n+1)) / 2
        return cls._from_dict({0: Fraction(1, 2), 1: Fraction(1, 2)})

    def scaled(self, c) -> "DiffExpr":
        c = Fraction(c)
        return DiffExpr._from_dict({o: c * v for o, v in self.taps})

    def __mul__(self, other: "DiffExpr") -> "DiffExpr":
        """Composition (= stencil convolution; translation-invariant, commutative)."""
        if not isinstance(other, DiffExpr):
            return NotImplemented
        out: dict[int, Fraction] = {}
        for o1, c1 in self.taps:
            for o2, c2 in other.taps:
                out[o1 + o2] = out.get(o1 + o2, Fraction(0)) + c1 * c2
        return DiffExpr._from_dict(out)

    def __pow__(self, m: int) -> "DiffExpr":
        if m < 0:
            raise ValueError("negative operator powers are not defined")
        out = DiffExpr.identity()
        base = self
        while m:
            if m & 1:
                out = out * base
            base = base * base
            m >>= 1
        return out

    def __add__(self, other: "DiffExpr") -> "DiffExpr":
        out = dict(self.taps)
        for o, c in other.taps:
            out[o] = out.get(o, Fraction(0)) + c
        return DiffExpr._from_dict(out)

    @property
    def min_offset(self) -> int:
        return self.taps[0][0] if self.taps else 0

    @property
    def max_offset(self) -> int:
        return self.taps[-1][0] if self.taps else 0

    def apply(self, seq):
        """Apply to a FinSuppSeq or LatticeSeq, producing the same type."""
        if isinstance(seq, FinSuppSeq):
            return _apply_finsupp(self, seq)
        if isinstance(seq, LatticeSeq):
            return _apply_lattice(self, seq)
        raise TypeError(f"cannot apply a difference stencil to {type(seq)!r}")


# ---------------------------------------------------------------------------
# sequence types
# ---------------------------------------------------------------------------

class FinSuppSeq:
    """Finitely supported sequence: dense block of mpfr values at an offset.

    Mixed-precision inputs are rounded down to the minimum precision.
    """

    __slots__ = ("_offset", "_values", "_precision")

    def __init__(self, offset: int, values: Iterable, precision: int | None = None):
        vals = list(values)
        votes = [precision] if precision is not None else []
        for v in vals:
            if isinstance(v, Real):
                votes.append(v.precision)
            elif isinstance(v, mpfr):
                votes.append(v.precision)
        prec = min(votes) if votes else DEFAULT_PRECISION
        self._offset = offset
        self._values = tuple(to_mpfr(v, prec) for v in vals)
        self._precision = prec

    @classmethod
    def delta(cls, n: int, precision: int = DEFAULT_PRECISION) -> "FinSuppSeq":
        return cls(n, [1], precision=precision)

    @classmethod
    def from_lattice(cls, seq: "LatticeSeq", lo: int, hi: int,
                     precision: int | None = None) -> "FinSuppSeq":
        """Hard truncation of a lattice sequence to the window [lo, hi]."""
        prec = precision if precision is not None else seq.precision
        return cls(lo, [seq.eval(n, prec) for n in range(lo, hi + 1)], precision=prec)

    @property
    def offset(self) -> int:
        return self._offset

    @property
    def precision(self) -> int:
        return self._precision

    @property
    def end(self) -> int:
        """Index one past the stored block."""
        return self._offset + len(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def at(self, n: int) -> mpfr:
        """Raw value at index n (exact zero outside the stored block)."""
        if self._offset <= n < self.end:
            return self._values[n - self._offset]
        return mpfr(0)

    def get(self, n: int) -> Real:
        return Real(self.at(n), self._precision)

    @property
    def support_floor(self) -> int | None:
        """Index of the first nonzero entry, or None for the zero sequence."""
        for i, v in enumerate(self._values):
            if v != 0:
                return self._offset + i
        return None

    @property
    def support_end(self) -> int | None:
        """Index of the last nonzero entry, or None for the zero sequence."""
        for i in range(len(self._values) - 1, -1, -1):
            if self._values[i] != 0:
                return self._offset + i
        return None

    def canonical(self) -> "FinSuppSeq":
        """Copy with leading/trailing stored zeros trimmed."""
        lo, hi = self.support_floor, self.support_end
        if lo is None:
            return FinSuppSeq(0, [], precision=self._precision)
        return FinSuppSeq(lo, self._values[lo - self._offset:hi - self._offset + 1],
                          precision=self._precision)

    def is_zero(self) -> bool:
        return self.support_floor is None

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinSuppSeq):
            return NotImplemented
        lo = min(self._offset, other._offset)
        hi = max(self.end, other.end)
        return all(self.at(n) == other.at(n) for n in range(lo, hi))

    def __hash__(self):
        return hash((self.support_floor, tuple(self._values)))

    def __repr__(self) -> str:
        return f"FinSuppSeq(offset={self._offset}, len={len(self._values)}, prec={self._precision})"


class LatticeSeq:
    """Sequence given by a deterministic evaluation rule n -> value.

    The rule receives ``(n, precision)`` and must return an mpfr accurate at
    that precision; values below ``support_floor`` are exactly zero.
    Evaluations are cached per (n, precision); rules must be pure.
    """

    __slots__ = ("_rule", "_support_floor", "_precision", "_cache")

    def __init__(self, rule: Callable[[int, int], mpfr], support_floor: int,
                 precision: int = DEFAULT_PRECISION):
        self._rule = rule
        self._support_floor = support_floor
        self._precision = precision
        self._cache: dict[tuple[int, int], mpfr] = {}

    @classmethod
    def from_window(cls, offset: int, values: Sequence, fill=0,
                    precision: int = DEFAULT_PRECISION,
                    support_floor: int | None = None) -> "LatticeSeq":
        """Rule backed by a dense window, constant ``fill`` outside it."""
        vals = [Fraction(str(v)) if isinstance(v, float) else v for v in values]
        fillv = Fraction(str(fill)) if isinstance(fill, float) else fill

        def rule(n: int, prec: int) -> mpfr:
            v = vals[n - offset] if offset <= n < offset + len(vals) else fillv
            return to_mpfr(v, prec)

        floor = support_floor if support_floor is not None else -(1 << 62)
        return cls(rule, floor, precision)

    @property
    def support_floor(self) -> int:
        return self._support_floor

    @property
    def precision(self) -> int:
        return self._precision

    def eval(self, n: int, precision: int | None = None) -> mpfr:
        prec = precision if precision is not None else self._precision
        if n < self._support_floor:
            return mpfr(0)
        key = (n, prec)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._rule(n, prec)
            self._cache[key] = hit
        return hit

    def get(self, n: int) -> Real:
        return Real(self.eval(n), self._precision)


# ---------------------------------------------------------------------------
# operator application
# ---------------------------------------------------------------------------

def _apply_finsupp(expr: DiffExpr, u: FinSuppSeq) -> FinSuppSeq:
    if not expr.taps or len(u) == 0:
        return FinSuppSeq(u.offset, [0] * len(u), precision=u.precision)
    taps = [(o, mpq(c.numerator, c.denominator)) for o, c in expr.taps]
    lo = u.offset - expr.max_offset
    hi = u.end - 1 - expr.min_offset
    out = []
    with context(u.precision):
        for n in range(lo, hi + 1):
            out.append(gmpy2.fsum([c * u.at(n + o) for o, c in taps]))
    return FinSuppSeq(lo, out, precision=u.precision)


def _apply_lattice(expr: DiffExpr, seq: LatticeSeq) -> LatticeSeq:
    taps = [(o, mpq(c.numerator, c.denominator)) for o, c in expr.taps]

    def rule(n: int, prec: int) -> mpfr:
        with context(prec):
            return gmpy2.fsum([c * seq.eval(n + o, prec) for o, c in taps])

    return LatticeSeq(rule, seq.support_floor - expr.max_offset, seq.precision)


def shift(u, k: int):
    """(S^k u)(n) = u(n + k)."""
    return DiffExpr.shift(k).apply(u)


def grad(u):
    """Backward difference: u(n) - u(n-1)."""
    return DiffExpr.grad().apply(u)


def divg(u):
    """Forward difference: u(n+1) - u(n)."""
    return DiffExpr.divg().apply(u)


def lap(u):
    """Second central difference: u(n-1) - 2 u(n) + u(n+1)."""
    return DiffExpr.lap().apply(u)


def midop(u):
    """Forward midpoint average: (u(n) + u(n+1)) / 2."""
    return DiffExpr.midop().apply(u)


def divg_pow(u, m: int):
    """m-fold forward difference."""
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    return (DiffExpr.divg() ** m).apply(u)


def neg_lap_pow(u, ell: int):
    """ell-th power of the negative second difference."""
    if ell < 0:
        raise ValueError(f"ell must be nonnegative, got {ell}")
    return (DiffExpr.neg_lap() ** ell).apply(u)


def half_power_expr(ell: int) -> DiffExpr:
    """Stencil of the half power of order ell.

    Order 2m is the m-th power of the negative second difference; order
    2m+1 additionally applies the backward difference.
    """
    if ell < 0:
        raise ValueError(f"ell must be nonnegative, got {ell}")
    m, odd = divmod(ell, 2)
    expr = DiffExpr.neg_lap() ** m
    if odd:
        expr = DiffExpr.grad() * expr
    return expr


def half_power(u, ell: int):
    return half_power_expr(ell).apply(u)


def quad_form(u: FinSuppSeq, ell: int, *, _work_precision: int | None = None) -> Real:
    """Sum of squares of the order-ell half power over its full finite support.

    Equals the quadratic form of the ell-th power of the negative discrete
    Laplacian for test vectors vanishing below index ell.
    """
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    floor = u.support_floor
    if floor is None:
        return Real(0, u.precision)
    if floor < ell:
        raise ValueError(
            f"test vector must vanish below index ell={ell}; first nonzero at {floor}"
        )
    work = _work_precision if _work_precision is not None else u.precision
    with context(work):
        v = _apply_finsupp(half_power_expr(ell), FinSuppSeq(u.offset, u._values, precision=work))  # noqa: SLF001
        total = gmpy2.fsum([x * x for x in v._values])  # noqa: SLF001
    return Real(mpfr(total, u.precision), u.precision)


def pointwise_mul(u: FinSuppSeq, v: FinSuppSeq) -> FinSuppSeq:
    """Entrywise product; support is the overlap of the operands' supports."""
    prec = min(u.precision, v.precision)
    lo = max(u.offset, v.offset)
    hi = min(u.end, v.end)
    if hi <= lo:
        return FinSuppSeq(0, [], precision=prec)
    with context(prec):
        vals = [u.at(n) * v.at(n) for n in range(lo, hi)]
    return FinSuppSeq(lo, vals, precision=prec)


def seq_add(u: FinSuppSeq, v: FinSuppSeq) -> FinSuppSeq:
    prec = min(u.precision, v.precision)
    lo = min(u.offset, v.offset)
    hi = max(u.end, v.end)
    with context(prec):
        vals = [u.at(n) + v.at(n) for n in range(lo, hi)]
    return FinSuppSeq(lo, vals, precision=prec)


def seq_scale(u: FinSuppSeq, c) -> FinSuppSeq:
    cq = mpq(Fraction(c).numerator, Fraction(c).denominator)
    with context(u.precision):
        vals = [cq * x for x in u._values]  # noqa: SLF001
    return FinSuppSeq(u.offset, vals, precision=u.precision)


def leibniz_div_pow(u: FinSuppSeq, v: FinSuppSeq, m: int) -> FinSuppSeq:
    """Product rule expansion of the m-fold forward difference of u*v:

    sum_j C(m, j) (div^j M^(m-j) u) (div^(m-j) M^j v),

    where M is the forward midpoint average.  Pointwise it agrees with
    divg_pow(u*v, m).
    """
    from math import comb

    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    D, M = DiffExpr.divg(), DiffExpr.midop()
    total: FinSuppSeq | None = None
    for j in range(m + 1):
        a = ((D ** j) * (M ** (m - j))).apply(u)
        b = ((D ** (m - j)) * (M ** j)).apply(v)
        term = seq_scale(pointwise_mul(a, b), comb(m, j))
        total = term if total is None else seq_add(total, term)
    assert total is not None
    return total


# ---------------------------------------------------------------------------
# mean-value bounds for iterated forward differences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerFunc:
    """Monomial x -> c * x^e with exact rational data; knows its derivatives."""

    exponent: Fraction
    coefficient: Fraction = Fraction(1)

    def __call__(self, x, precision: int = DEFAULT_PRECISION) -> mpfr:
        with context(precision):
            xv = to_mpfr(x, precision)
            c = mpq(self.coefficient.numerator, self.coefficient.denominator)
            e = self.exponent
            if xv == 0:
                return mpfr(0) if e > 0 else mpfr(c)
            if e.denominator == 1:
                return c * xv ** int(e)
            return c * xv ** mpq(e.numerator, e.denominator)

    def derivative(self, order: int = 1) -> "PowerFunc":
        c, e = self.coefficient, self.exponent
        for _ in range(order):
            c *= e
            e -= 1
        return PowerFunc(e, c)


def discrete_mvt_bounds(g, n: int, N: int, derivative=None,
                        precision: int = DEFAULT_PRECISION) -> tuple[Real, Real, Real]:
    """N-fold forward difference of g sampled at integers, with its mean-value
    bracket: the difference equals the N-th derivative somewhere in (n, n+N),
    so for monotone derivatives it lies between the endpoint derivatives.

    Returns (value, lower, upper), the bounds ordered.  The caller asserts the
    monotonicity of the N-th derivative on (n, n+N).
    """
    from math import comb

    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if derivative is None:
        if not hasattr(g, "derivative"):
            raise ValueError("supply the N-th derivative or use a PowerFunc handle")
        derivative = g.derivative(N)
    work = precision + 32
    with context(work):
        value = gmpy2.fsum(
            [comb(N, i) * (-1) ** (N - i) * g(n + i, work) for i in range(N + 1)]
        )
        d_left = derivative(n, work)
        d_right = derivative(n + N, work)
    lower, upper = (d_left, d_right) if d_left <= d_right else (d_right, d_left)
    return (Real(mpfr(value, precision), precision),
            Real(mpfr(lower, precision), precision),
            Real(mpfr(upper, precision), precision))


# ---------------------------------------------------------------------------
# adaptive-precision stencil evaluation
# ---------------------------------------------------------------------------

def apply_taps_accurate(rule: Callable[[int, int], mpfr],
                        taps: Iterable[tuple[int, Fraction]],
                        n: int, target_prec: int, *,
                        start_guard: int = 64,
                        max_prec: int = 1 << 14) -> mpfr:
    """Evaluate sum_i c_i * rule(n+i) to ~target_prec accurate bits.

    High-order differences of smooth sequences cancel; the working precision
    is raised until the observed cancellation leaves enough accurate bits.
    If all terms vanish the result is exactly zero.  If cancellation persists
    at max_prec the value is classified as zero (numerically indistinguishable
    from an exact identity at that precision).
    """
    taps_q = [(o, mpq(c.numerator, c.denominator)) for o, c in taps]
    work = target_prec + start_guard
    while True:
        with context(work):
            terms = []
            for off, c in taps_q:
                v = rule(n + off, work)
                if v != 0:
                    terms.append(c * v)
            if not terms:
                return mpfr(0)
            s = gmpy2.fsum(terms)
            max_exp = max(gmpy2.get_exp(t) for t in terms)
        lost = work if s == 0 else max_exp - gmpy2.get_exp(s)
        if lost <= work - target_prec - 10:
            return s
        if work >= max_prec:
            return mpfr(0)
        work = min(max_prec, max(2 * work, target_prec + lost + start_guard))


def taps_sign(rule, taps, n: int, target_prec: int = 96) -> int:
    """Certified-up-to-max-precision sign of a stencil applied at n (-1, 0, +1)."""
    return int(gmpy2.sign(apply_taps_accurate(rule, taps, n, target_prec)))
