"""Weight families: parameter sequences, pointwise evaluation, and series forms.

The central object is the quotient weight rho(g) = ((-lap)^ell g) / g for a
positive parameter sequence g.  The canonical family g_n = sqrt(n) (n-1)...
(n-ell+1) produces the optimal weights; the q-, shifted-, alpha- and
polyharmonic families generalize it.  Closed-form comparison weights (the
improved Hardy weight, the two published Rellich weights, the classical
power weight, and the half-integer monomial quotient) are also evaluated
here.

Pointwise evaluation always goes through the direct finite-difference
quotient with adaptive internal precision; the series route is a separate
code path so the two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq

from .exactmath import (
    binom_rational,
    hardy_even_coeff,
    pochhammer,
    r_coeff,
    stirling_second,
    x_coeff,
)
from .lattice import DiffExpr, LatticeSeq, apply_taps_accurate
from .mpreal import DEFAULT_PRECISION, Real, context

__all__ = [
    "WeightSpec",
    "ExpansionTable",
    "ChainReport",
    "g_param",
    "rho_eval",
    "rho_series",
    "rho_expansion_table",
    "monomial_lap_series",
    "lower_bound_chain",
]

_PARAM_FAMILIES = ("canonical", "q", "shifted", "alpha2", "polyharmonic")
_CLOSED_FAMILIES = ("kpp", "gks", "hy", "birman_classical", "half_power_monomial")


@dataclass(frozen=True)
class WeightSpec:
    """Immutable selector for a weight family and its parameters."""

    family: str
    ell: int
    m: int = 0
    q: Fraction | None = None
    alphas: tuple[Fraction, ...] = ()
    hy_terms: int = 0
    decay: Fraction | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in _PARAM_FAMILIES + _CLOSED_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.ell < 1:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if self.m < 0:
            raise ValueError(f"m must be nonnegative, got {self.m}")
        if self.family in ("q", "shifted"):
            if self.q is None or not (0 < self.q < 1):
                raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if self.family == "alpha2":
            if self.ell != 2 or len(self.alphas) != 1:
                raise ValueError("alpha2 requires ell = 2 and a single alpha")
        if self.family == "polyharmonic" and len(self.alphas) != self.ell - 1:
            raise ValueError(
                f"polyharmonic requires ell-1 = {self.ell - 1} alphas, got {len(self.alphas)}"
            )
        if self.family == "kpp" and self.ell != 1:
            raise ValueError("the improved Hardy weight has ell = 1")
        if self.family in ("gks", "hy") and self.ell != 2:
            raise ValueError(f"{self.family} is a Rellich weight: ell = 2")
        if self.family == "hy" and self.hy_terms < 2:
            raise ValueError("hy requires at least 2 series terms")
        if self.decay is None:
            object.__setattr__(self, "decay", self._default_decay())

    def _default_decay(self) -> Fraction | None:
        if self.family in ("canonical", "alpha2", "polyharmonic"):
            return Fraction(1, 2)
        if self.family in ("q", "shifted"):
            return 1 - self.q
        return None

    # -- factories -----------------------------------------------------------

    @classmethod
    def canonical(cls, ell: int) -> "WeightSpec":
        return cls("canonical", ell)

    @classmethod
    def q_family(cls, ell: int, q) -> "WeightSpec":
        return cls("q", ell, q=Fraction(q))

    @classmethod
    def shifted(cls, ell: int, m: int, q=Fraction(1, 2)) -> "WeightSpec":
        return cls("shifted", ell, m=m, q=Fraction(q))

    @classmethod
    def alpha2(cls, alpha) -> "WeightSpec":
        return cls("alpha2", 2, alphas=(Fraction(alpha),))

    @classmethod
    def polyharmonic(cls, ell: int, alphas) -> "WeightSpec":
        return cls("polyharmonic", ell, alphas=tuple(Fraction(a) for a in alphas))

    @classmethod
    def kpp(cls) -> "WeightSpec":
        return cls("kpp", 1)

    @classmethod
    def gks(cls) -> "WeightSpec":
        return cls("gks", 2)

    @classmethod
    def hy(cls, terms: int = 16) -> "WeightSpec":
        return cls("hy", 2, hy_terms=terms)

    @classmethod
    def birman_classical(cls, ell: int) -> "WeightSpec":
        return cls("birman_classical", ell)

    @classmethod
    def half_power_monomial(cls, ell: int) -> "WeightSpec":
        return cls("half_power_monomial", ell)


# ---------------------------------------------------------------------------
# parameter sequences
# ---------------------------------------------------------------------------

def _falling_poly(n: int, ell: int) -> int:
    """(n-1)(n-2)...(n-ell+1), the empty product being 1."""
    out = 1
    for j in range(1, ell):
        out *= n - j
    return out


def _pow_q(n: int, q: Fraction, prec: int) -> mpfr:
    """n^q for integer n >= 0, correctly rounded at the active context."""
    if n == 0:
        return mpfr(0) if q > 0 else mpfr(1)
    if q.denominator == 1:
        return mpfr(n ** int(q))
    if q.denominator == 2:
        return gmpy2.sqrt(mpfr(n)) * mpfr(n) ** int(q - Fraction(1, 2))
    return mpfr(n) ** mpq(q.numerator, q.denominator)


def _q_seq_rule(ell: int, q: Fraction):
    def rule(n: int, prec: int) -> mpfr:
        if n < ell:
            return mpfr(0)
        with context(prec + 8):
            v = _pow_q(n, q, prec + 8) * _falling_poly(n, ell)
        return mpfr(v, prec)

    return rule


def _sqrt_rational_rule(radicand, floor: int):
    """Rule n -> sqrt(radicand(n)) with radicand returning an exact Fraction."""

    def rule(n: int, prec: int) -> mpfr:
        if n < floor:
            return mpfr(0)
        r = radicand(n)
        if r < 0:
            raise ValueError(f"negative radicand {r} at n = {n}")
        with context(prec + 8):
            v = gmpy2.sqrt(mpfr(mpq(r.numerator, r.denominator), prec + 8))
        return mpfr(v, prec)

    return rule


def g_param(spec: WeightSpec, precision: int = DEFAULT_PRECISION,
            check_horizon: int = 400) -> LatticeSeq:
    """Parameter sequence for a sequence-bearing family, vanishing below ell.

    The polyharmonic family takes the square root of a degree-(2ell-1)
    polynomial; any negative polynomial value on [ell, check_horizon] is an
    error naming the offending index, never silently clamped.
    """
    ell = spec.ell
    if spec.family in ("canonical", "q"):
        q = spec.q if spec.family == "q" else Fraction(1, 2)
        return LatticeSeq(_q_seq_rule(ell, q), ell, precision)
    if spec.family == "shifted":
        base = _q_seq_rule(ell + spec.m, spec.q)
        taps = (DiffExpr.divg() ** spec.m).taps

        def rule(n: int, prec: int) -> mpfr:
            return apply_taps_accurate(base, taps, n, prec)

        return LatticeSeq(rule, ell, precision)
    if spec.family == "alpha2":
        alpha = spec.alphas[0]

        def radicand(n: int) -> Fraction:
            return Fraction(n) * (n - 1) * (n - alpha)

        return LatticeSeq(_sqrt_rational_rule(radicand, 2), 2, precision)
    if spec.family == "polyharmonic":
        alphas = spec.alphas

        def radicand(n: int) -> Fraction:
            out = Fraction(1)
            for j in range(ell):
                out *= n - j
            for a in alphas:
                out *= n - a
            return out

        bad = [n for n in range(ell, check_horizon + 1) if radicand(n) < 0]
        if bad:
            raise ValueError(
                f"polyharmonic parameters give a negative radicand at n = {bad[0]} "
                f"({len(bad)} offending indices on [{ell}, {check_horizon}])"
            )
        return LatticeSeq(_sqrt_rational_rule(radicand, ell), ell, precision)
    raise ValueError(f"family {spec.family!r} has no parameter sequence")


# ---------------------------------------------------------------------------
# pointwise weight evaluation
# ---------------------------------------------------------------------------

def _difference_quotient(spec: WeightSpec, n: int, prec: int) -> mpfr:
    ell = spec.ell
    if spec.family == "shifted":
        base = _q_seq_rule(ell + spec.m, spec.q)
        extra = DiffExpr.divg() ** spec.m
    elif spec.family in ("canonical", "q"):
        q = spec.q if spec.family == "q" else Fraction(1, 2)
        base = _q_seq_rule(ell, q)
        extra = DiffExpr.identity()
    else:  # alpha2 / polyharmonic
        base = g_param(spec, prec).eval
        extra = DiffExpr.identity()
    num_taps = ((DiffExpr.neg_lap() ** ell) * extra).taps
    den_taps = extra.taps
    den = apply_taps_accurate(base, den_taps, n, prec + 8)
    if den == 0:
        raise ValueError(f"parameter sequence vanishes at n = {n}")
    num = apply_taps_accurate(base, num_taps, n, prec + 8)
    with context(prec):
        return num / den


def _monomial_quotient(nu: Fraction, ell: int, n: int, prec: int) -> mpfr:
    """((-lap)^ell x^nu)(n) / n^nu via the direct stencil."""

    def rule(m: int, p: int) -> mpfr:
        with context(p + 8):
            v = _pow_q(m, nu, p + 8) if m >= 0 else mpfr(0)
        return mpfr(v, p)

    taps = (DiffExpr.neg_lap() ** ell).taps
    num = apply_taps_accurate(rule, taps, n, prec + 8)
    with context(prec):
        return num / rule(n, prec + 8)


def rho_eval(spec: WeightSpec, n: int, precision: int = DEFAULT_PRECISION) -> Real:
    """Pointwise weight value at index n (n >= ell).

    Difference-defined families use the direct finite-difference quotient
    with adaptive internal precision; closed-form comparison weights use
    their published formulas.
    """
    if n < spec.ell:
        raise ValueError(f"n must be at least ell = {spec.ell}, got {n}")
    prec = precision
    if spec.family in _PARAM_FAMILIES:
        return Real(_difference_quotient(spec, n, prec), prec)
    if spec.family == "kpp":
        with context(prec + 16):
            v = 2 - gmpy2.sqrt(mpfr(mpq(n - 1, n))) - gmpy2.sqrt(mpfr(mpq(n + 1, n)))
        return Real(mpfr(v, prec), prec)
    if spec.family == "gks":
        return Real(_monomial_quotient(Fraction(3, 2), 2, n, prec), prec)
    if spec.family == "half_power_monomial":
        return Real(_monomial_quotient(Fraction(2 * spec.ell - 1, 2), spec.ell, n, prec), prec)
    if spec.family == "birman_classical":
        c = pochhammer(Fraction(1, 2), spec.ell) ** 2 / Fraction(n) ** (2 * spec.ell)
        return Real(c, prec)
    if spec.family == "hy":
        # quarter of (bracket/n^2 + even tail series); truncation error is
        # bounded by the first omitted (positive) term
        guard = prec + 2 * max(n.bit_length(), 1) + 16
        with context(guard):
            t2 = mpfr(mpq(n * n, (n - 1) * (n - 1)))
            t3 = gmpy2.sqrt(mpfr(mpq(n, n - 1)))
            t4 = mpfr(mpq(n + 1, n)) * gmpy2.sqrt(mpfr(mpq(n + 1, n)))
            a_n = (1 + t2 - t3 - t4) / (n * n)
            tail = Fraction(0)
            for k in range(2, spec.hy_terms + 1):
                tail += (2 * k + 1) ** 2 * hardy_even_coeff(k) / Fraction(n) ** (2 * k + 2)
            v = (a_n + mpfr(mpq(tail.numerator, tail.denominator))) / 4
        return Real(mpfr(v, prec), prec)
    raise AssertionError(f"unhandled family {spec.family!r}")


# ---------------------------------------------------------------------------
# series forms
# ---------------------------------------------------------------------------

def rho_series(ell: int, n: int, K: int, precision: int = DEFAULT_PRECISION,
               allow_boundary: bool = False) -> Real:
    """Truncated series for the canonical weight:

    [n^(ell-1) / ((n-1)...(n-ell+1))] * sum_{k=2ell..K} r_k / n^k.

    All arithmetic is exact rational; only the final value is rounded.  At
    n = ell the term ratio is 1 and convergence is slow, so that boundary
    index is refused unless allow_boundary is set.
    """
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    if n < ell:
        raise ValueError(f"n must be at least ell = {ell}, got {n}")
    if K < 2 * ell:
        raise ValueError(f"K must be at least 2*ell = {2 * ell}, got {K}")
    if n == ell and not allow_boundary:
        raise ValueError(
            "series convergence at n = ell is slow; pass allow_boundary=True to force"
        )
    pref = Fraction(n) ** (ell - 1) / _falling_poly(n, ell)
    total = Fraction(0)
    npow = Fraction(1, n) ** (2 * ell)
    for k in range(2 * ell, K + 1):
        total += r_coeff(k, ell) * npow
        npow /= n
    return Real(pref * total, precision)


@dataclass(frozen=True)
class ExpansionTable:
    """Exact coefficients of 1/n^m in the full expansion of the canonical weight."""

    ell: int
    coefficients: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        if self.coefficients and self.coefficients[0][0] != 2 * self.ell:
            raise ValueError("expansion must start at power 2*ell")
        if self.ell >= 2 and any(c <= 0 for _, c in self.coefficients):
            raise ValueError("all expansion coefficients must be positive for ell >= 2")

    def coefficient(self, power: int) -> Fraction:
        for p, c in self.coefficients:
            if p == power:
                return c
        raise KeyError(power)


def rho_expansion_table(ell: int, max_power: int) -> ExpansionTable:
    """Combine the series coefficients with the prefactor's own expansion.

    The coefficient of 1/n^m is sum_{k=2ell..m} S(m-k+ell-1, ell-1) r_k,
    where S are Stirling numbers of the second kind.
    """
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    if max_power < 2 * ell:
        raise ValueError(f"max_power must be at least 2*ell = {2 * ell}, got {max_power}")
    rows = []
    for m in range(2 * ell, max_power + 1):
        c = Fraction(0)
        for k in range(2 * ell, m + 1):
            c += stirling_second(m - k + ell - 1, ell - 1) * r_coeff(k, ell)
        rows.append((m, c))
    return ExpansionTable(ell, tuple(rows))


def monomial_lap_series(nu, ell: int, n: int, K: int,
                        precision: int = DEFAULT_PRECISION) -> Real:
    """Truncated expansion of the ell-th negative-Laplacian power of x^nu:

    sum_{m=2ell..K} C(nu, m) X_m n^(nu-m),

    converging to the direct stencil value as K grows (for n > ell, or n >= ell
    when nu > 0).
    """
    nu = Fraction(nu)
    if n < ell or (n == ell and nu <= 0):
        raise ValueError(f"n = {n} out of the convergence range for nu = {nu}")
    total = Fraction(0)
    for m in range(2 * ell, K + 1):
        x = x_coeff(m, ell)
        if x == 0:
            continue
        total += binom_rational(nu, m) * x / Fraction(n) ** m
    with context(precision + 16):
        v = mpfr(mpq(total.numerator, total.denominator)) * _pow_q(n, nu, precision + 16)
    return Real(mpfr(v, precision), precision)


@dataclass(frozen=True)
class ChainReport:
    """Three-term lower-bound chain at one index, with strict-ordering flags."""

    optimal: Real
    monomial: Real
    classical: Real

    @property
    def optimal_gt_monomial(self) -> bool:
        return self.optimal > self.monomial

    @property
    def monomial_gt_classical(self) -> bool:
        return self.monomial > self.classical

    @property
    def ordered(self) -> bool:
        return self.optimal_gt_monomial and self.monomial_gt_classical


def lower_bound_chain(ell: int, n: int, precision: int = DEFAULT_PRECISION) -> ChainReport:
    """Evaluate the canonical weight, the half-integer monomial quotient and
    the classical power weight at n, reporting the (expected strict) ordering.

    Any ordering violation is visible in the flags, never masked.
    """
    if ell < 2:
        raise ValueError(f"the chain is stated for ell >= 2, got {ell}")
    if n < ell:
        raise ValueError(f"n must be at least ell = {ell}, got {n}")
    return ChainReport(
        rho_eval(WeightSpec.canonical(ell), n, precision),
        rho_eval(WeightSpec.half_power_monomial(ell), n, precision),
        rho_eval(WeightSpec.birman_classical(ell), n, precision),
    )
