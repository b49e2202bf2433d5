"""Verification engine: the quadratic-form identity, its remainder terms, the
positivity assumption ledger, inequality checks, and the finite optimality
probes built from smooth log-scale cutoff vectors.

Everything here is a falsifier at a finite horizon, never a prover: identity
checks report measured residuals (which are rounding-dominated, since the
identities are exact), assumption scans are stamped "verified up to N", and
the probes corroborate the qualitative behavior (monotone decrease, bounded
bands) that the limiting optimality statements predict.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _fastprobe
from .lattice import (
    DiffExpr,
    FinSuppSeq,
    LatticeSeq,
    apply_taps_accurate,
    quad_form,
    taps_sign,
)
from .mpreal import DEFAULT_PRECISION, Real, context
from .weights import WeightSpec, g_param, rho_eval

__all__ = [
    "AssumptionViolation",
    "IdentityReport",
    "AssumptionReport",
    "InequalityReport",
    "CutoffSpec",
    "CriticalityPoint",
    "OptimalityPoint",
    "AttainabilityReport",
    "random_test_vector",
    "remainder",
    "identity_check",
    "weighted_hardy_check",
    "assumptions_check",
    "inequality_check",
    "criticality_probe",
    "optimality_probe",
    "attainability_probe",
    "alpha2_feasible",
    "alpha_admissible_range",
    "cutoff_test_vector",
]

_GUARD = 96  # extra internal bits so reported residuals are rounding-dominated


class AssumptionViolation(ValueError):
    """A positivity assumption on the parameter sequence failed at (k, n)."""

    def __init__(self, tag: str, k: int, n: int, value=None):
        self.tag = tag
        self.k = k
        self.n = n
        self.value = value
        detail = f" (value {value})" if value is not None else ""
        super().__init__(f"assumption {tag} violated at k={k}, n={n}{detail}")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    lhs: Real
    weight_term: Real
    remainders: tuple[Real, ...]
    residual: Real
    relative_residual: Real


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the positivity scans, valid only up to the stated horizon."""

    horizon: int
    a1_ok: bool
    a2_ok: bool
    a2prime_ok: bool
    a3strict_ok: bool
    first_violation: tuple[str, int, int] | None

    @property
    def note(self) -> str:
        return f"verified up to N = {self.horizon} (finite scan, not a proof)"


@dataclass(frozen=True)
class InequalityReport:
    lhs: Real
    rhs: Real
    margin: Real


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth log-scale cutoff: plateau and decay windows scale with N.

    ``criticality`` is 1 up to N then decays to 0 across [N, N^2];
    ``plateau`` rises across [N, N^2], holds 1 on [N^2, 2N^2], falls across
    [2N^2, 2N^3].  eps is the transition-profile margin, in (0, 1/2).
    """

    N: int
    shape: str = "criticality"
    eps: float = 0.25

    def __post_init__(self):
        if self.shape not in ("criticality", "plateau"):
            raise ValueError(f"unknown cutoff shape {self.shape!r}")
        if not 0 < self.eps < 0.5:
            raise ValueError(f"eps must lie in (0, 1/2), got {self.eps}")
        if self.N < 2:
            raise ValueError(f"N must be at least 2, got {self.N}")

    def value(self, x: float) -> float:
        return float(_fastprobe.cutoff_values(
            np.asarray([x], dtype=float), self.shape, self.N, self.eps)[0])

    def value_mpfr(self, x: int, precision: int) -> mpfr:
        return _cutoff_mpfr(self.shape, self.N, self.eps, x, precision)

    @property
    def support_end(self) -> int:
        return self.N**2 if self.shape == "criticality" else 2 * self.N**3


@dataclass(frozen=True)
class CriticalityPoint:
    N: int
    total_remainder: float
    remainder_log_product: float  # total_remainder * ln N


@dataclass(frozen=True)
class OptimalityPoint:
    N: int
    remainder_sum: float
    weight_sum: float
    ratio: float


@dataclass(frozen=True)
class AttainabilityReport:
    lhs_partial: Real
    rhs_partial: Real
    gap: Real
    boundary_remainder: Real  # remainder terms near the truncation edge


# ---------------------------------------------------------------------------
# reproducible test vectors
# ---------------------------------------------------------------------------

def random_test_vector(seed: int, ell: int, length: int,
                       precision: int = DEFAULT_PRECISION) -> FinSuppSeq:
    """Compactly supported vector starting at index ell with entries uniform
    in [-1, 1].

    Generator: the stdlib Mersenne Twister (random.Random) seeded with the
    64-bit ``seed``; entries are the double-precision draws, hence exactly
    representable and bit-for-bit reproducible at any precision >= 53.
    """
    rng = random.Random(seed & (2**64 - 1))
    return FinSuppSeq(ell, [rng.uniform(-1.0, 1.0) for _ in range(length)],
                      precision=precision)


# ---------------------------------------------------------------------------
# remainder terms and the identity
# ---------------------------------------------------------------------------

def _governing_precision(*objs) -> int:
    return min(o.precision for o in objs)


def _div_pow_values(g: LatticeSeq, order: int, n_lo: int, n_hi: int, work: int,
                    k_label: int, require_positive: bool = True) -> dict[int, mpfr]:
    taps = (DiffExpr.divg() ** order).taps
    out = {}
    for n in range(n_lo, n_hi + 1):
        v = apply_taps_accurate(g.eval, taps, n, work)
        if require_positive and v <= 0:
            raise AssumptionViolation("a1", k_label, n, v)
        out[n] = v
    return out


def _remainder_raw(g: LatticeSeq, u: FinSuppSeq, ell: int, k: int, work: int,
                   n_lo: int | None = None, n_hi: int | None = None) -> mpfr:
    """Remainder term of order k at working precision (raw mpfr).

    sum over n of [(-lap)^(ell-1-k) div^(k+1) g_n / div^(k+1) g_n] *
    |sqrt(div^k g_n / div^k g_{n+1}) div^k u_{n+1}
     - sqrt(div^k g_{n+1} / div^k g_n) div^k u_n|^2,

    the coefficient being exactly 1 for k = ell-1.
    """
    if not 0 <= k <= ell - 1:
        raise ValueError(f"k must lie in [0, ell-1] = [0, {ell - 1}], got {k}")
    floor = u.support_floor
    if floor is None:
        return mpfr(0)
    if floor < ell:
        raise ValueError(f"test vector must vanish below index ell={ell}")
    end = u.support_end
    lo = ell - k if n_lo is None else max(n_lo, ell - k)
    hi = end if n_hi is None else n_hi
    if hi < lo:
        return mpfr(0)

    uw = FinSuppSeq(u.offset, [u.at(u.offset + i) for i in range(len(u))], precision=work)
    du = (DiffExpr.divg() ** k).apply(uw)
    gk = _div_pow_values(g, k, lo, hi + 1, work, k)
    pref_taps = None
    if k < ell - 1:
        pref_taps = ((DiffExpr.neg_lap() ** (ell - 1 - k)) * (DiffExpr.divg() ** (k + 1))).taps
        gk1 = _div_pow_values(g, k + 1, lo, hi, work, k + 1)

    with context(work):
        total = mpfr(0)
        for n in range(lo, hi + 1):
            dun, dunp1 = du.at(n), du.at(n + 1)
            if dun == 0 and dunp1 == 0:
                continue
            ratio = gk[n] / gk[n + 1]
            bracket = gmpy2.sqrt(ratio) * dunp1 - gmpy2.sqrt(1 / ratio) * dun
            if pref_taps is not None:
                num = apply_taps_accurate(g.eval, pref_taps, n, work)
                total += (num / gk1[n]) * bracket * bracket
            else:
                total += bracket * bracket
    return total


def remainder(g: LatticeSeq, u: FinSuppSeq, ell: int, k: int,
              precision: int | None = None) -> Real:
    """Nonnegative remainder term of order k completing the identity.

    Requires the level-k and level-(k+1) forward differences of g to be
    positive on the summation range; a nonpositive value raises
    :class:`AssumptionViolation` carrying (k, n).
    """
    prec = precision if precision is not None else _governing_precision(g, u)
    raw = _remainder_raw(g, u, ell, k, prec + _GUARD)
    return Real(mpfr(raw, prec), prec)


def identity_check(g: LatticeSeq, u: FinSuppSeq, ell: int,
                   precision: int | None = None) -> IdentityReport:
    """Split the order-ell quadratic form of u into weight term plus remainders.

    Both sides are computed independently (half-power sum of squares on the
    left; the weight quotient and the remainder sums on the right), so the
    residual measures rounding only.
    """
    prec = precision if precision is not None else _governing_precision(g, u)
    work = prec + _GUARD
    floor = u.support_floor
    if floor is None:
        zero = Real(0, prec)
        return IdentityReport(zero, zero, tuple(Real(0, prec) for _ in range(ell)),
                              zero, zero)
    if floor < ell:
        raise ValueError(f"test vector must vanish below index ell={ell}")

    lhs_raw = quad_form(u, ell, _work_precision=work).value
    num_taps = (DiffExpr.neg_lap() ** ell).taps
    with context(work):
        wt = mpfr(0)
        for n in range(floor, u.support_end + 1):
            un = u.at(n)
            if un == 0:
                continue
            gn = g.eval(n, work)
            if gn <= 0:
                raise AssumptionViolation("a1", 0, n, gn)
            rho_n = apply_taps_accurate(g.eval, num_taps, n, work) / gn
            wt += rho_n * un * un
    rem_raw = [_remainder_raw(g, u, ell, k, work) for k in range(ell)]
    with context(work):
        residual = lhs_raw - wt - gmpy2.fsum(rem_raw)
        rel = abs(residual) / max(mpfr(1), abs(lhs_raw))
    return IdentityReport(
        Real(mpfr(lhs_raw, prec), prec),
        Real(mpfr(wt, prec), prec),
        tuple(Real(mpfr(r, prec), prec) for r in rem_raw),
        Real(mpfr(residual, prec), prec),
        Real(mpfr(rel, prec), prec),
    )


def weighted_hardy_check(V: LatticeSeq, g: LatticeSeq, u: FinSuppSeq,
                         precision: int | None = None) -> IdentityReport:
    """First-order weighted identity:

    sum V_n |grad u_n|^2 + sum [div(V grad g)_n / g_n] |u_n|^2
        = sum V_{n+1} |sqrt(g_n/g_{n+1}) u_{n+1} - sqrt(g_{n+1}/g_n) u_n|^2.

    Reported with lhs = the gradient sum, weight_term = minus the potential
    sum, and the right-hand side as the single remainder entry.
    """
    prec = precision if precision is not None else _governing_precision(V, g, u)
    work = prec + _GUARD
    floor = u.support_floor
    if floor is None:
        zero = Real(0, prec)
        return IdentityReport(zero, zero, (zero,), zero, zero)
    if floor < 1:
        raise ValueError("test vector must vanish below index 1")
    end = u.support_end

    for n in range(1, end + 2):
        if g.eval(n, work) <= 0:
            raise AssumptionViolation("a1", 0, n, g.eval(n, work))

    with context(work):
        lhs = mpfr(0)
        for n in range(1, end + 2):
            dn = u.at(n) - u.at(n - 1)
            if dn != 0:
                lhs += V.eval(n, work) * dn * dn
        pot = mpfr(0)
        for n in range(max(1, floor), end + 1):
            un = u.at(n)
            if un == 0:
                continue
            gm1 = g.eval(n - 1, work)
            gn = g.eval(n, work)
            gp1 = g.eval(n + 1, work)
            div_v_grad = V.eval(n + 1, work) * (gp1 - gn) - V.eval(n, work) * (gn - gm1)
            pot += (div_v_grad / gn) * un * un
        rhs = mpfr(0)
        for n in range(max(1, floor - 1), end + 1):
            unp1, un = u.at(n + 1), u.at(n)
            if un == 0 and unp1 == 0:
                continue
            ratio = g.eval(n, work) / g.eval(n + 1, work)
            term = gmpy2.sqrt(ratio) * unp1 - gmpy2.sqrt(1 / ratio) * un
            rhs += V.eval(n + 1, work) * term * term
        residual = lhs + pot - rhs
        rel = abs(residual) / max(mpfr(1), abs(lhs))
        neg_pot = -pot
    return IdentityReport(
        Real(mpfr(lhs, prec), prec),
        Real(mpfr(neg_pot, prec), prec),
        (Real(mpfr(rhs, prec), prec),),
        Real(mpfr(residual, prec), prec),
        Real(mpfr(rel, prec), prec),
    )


# ---------------------------------------------------------------------------
# assumption ledger
# ---------------------------------------------------------------------------

def assumptions_check(g: LatticeSeq, ell: int, N: int) -> AssumptionReport:
    """Scan the positivity assumptions on [their stated ranges] up to N.

    a1: div^k g_n > 0 for n >= ell-k, 0 <= k < ell.
    a2: (-lap)^(ell-k) div^k g_n >= 0 for n >= ell+1-k, 1 <= k < ell.
    a2prime: (-lap)^ell g_n >= 0 for n >= ell.
    a3strict: (-lap)^ell g_n > 0 and (for ell >= 2) (-lap)^(ell-1) div g_n > 0,
    for n >= ell.

    The booleans certify the scanned range only; signs are resolved with
    adaptive precision, values indistinguishable from zero count as zero.
    """
    if N < ell:
        raise ValueError(f"N must be at least ell = {ell}, got {N}")
    first: tuple[str, int, int] | None = None

    def note(tag: str, k: int, n: int):
        nonlocal first
        if first is None:
            first = (tag, k, n)

    D = DiffExpr.divg()
    a1_ok = True
    for k in range(ell):
        taps = (D ** k).taps
        for n in range(ell - k, N + 1):
            if taps_sign(g.eval, taps, n) <= 0:
                a1_ok = False
                note("a1", k, n)
                break
    a2_ok = True
    for k in range(1, ell):
        taps = ((DiffExpr.neg_lap() ** (ell - k)) * (D ** k)).taps
        for n in range(ell + 1 - k, N + 1):
            if taps_sign(g.eval, taps, n) < 0:
                a2_ok = False
                note("a2", k, n)
                break
    a2p_ok = True
    taps_full = (DiffExpr.neg_lap() ** ell).taps
    for n in range(ell, N + 1):
        if taps_sign(g.eval, taps_full, n) < 0:
            a2p_ok = False
            note("a2prime", 0, n)
            break
    a3_ok = True
    for n in range(ell, N + 1):
        if taps_sign(g.eval, taps_full, n) <= 0:
            a3_ok = False
            note("a3strict", 0, n)
            break
    if a3_ok and ell >= 2:
        taps_mixed = ((DiffExpr.neg_lap() ** (ell - 1)) * D).taps
        for n in range(ell, N + 1):
            if taps_sign(g.eval, taps_mixed, n) <= 0:
                a3_ok = False
                note("a3strict", 1, n)
                break
    return AssumptionReport(N, a1_ok, a2_ok, a2p_ok, a3_ok, first)


def inequality_check(spec: WeightSpec, u: FinSuppSeq,
                     precision: int | None = None) -> InequalityReport:
    """Quadratic form of u against its weighted square sum; margin = lhs - rhs."""
    prec = precision if precision is not None else u.precision
    work = prec + _GUARD
    ell = spec.ell
    floor = u.support_floor
    if floor is None:
        zero = Real(0, prec)
        return InequalityReport(zero, zero, zero)
    if floor < ell:
        raise ValueError(f"test vector must vanish below index ell={ell}")
    lhs = quad_form(u, ell, _work_precision=work).value
    with context(work):
        rhs = mpfr(0)
        for n in range(floor, u.support_end + 1):
            un = u.at(n)
            if un != 0:
                rhs += rho_eval(spec, n, min(work, 1024)).value * un * un
        margin = lhs - rhs
    return InequalityReport(Real(mpfr(lhs, prec), prec), Real(mpfr(rhs, prec), prec),
                            Real(mpfr(margin, prec), prec))


# ---------------------------------------------------------------------------
# cutoff vectors and probes
# ---------------------------------------------------------------------------

def _cutoff_mpfr(shape: str, N: int, eps: float, x: int, prec: int) -> mpfr:
    """Scalar cutoff value at integer x in mpfr (the oracle route)."""
    with context(prec):
        lN = gmpy2.log(mpfr(N))
        if shape == "criticality":
            if x <= N:
                return mpfr(1)
            if x > N * N:
                return mpfr(0)
            t = (2 * lN - gmpy2.log(mpfr(x))) / lN
        else:
            if x <= N or x > 2 * N**3:
                return mpfr(0)
            if N * N < x <= 2 * N * N:
                return mpfr(1)
            if x <= N * N:
                t = (gmpy2.log(mpfr(x)) - lN) / lN
            else:
                t = (gmpy2.log(mpfr(2 * N**3)) - gmpy2.log(mpfr(x))) / lN
        eps_q = mpfr(Fraction(eps).numerator) / Fraction(eps).denominator
        s = (t - eps_q) / (1 - 2 * eps_q)
        if s <= 0:
            return mpfr(0)
        if s >= 1:
            return mpfr(1)
        ea = gmpy2.exp(-1 / s)
        eb = gmpy2.exp(-1 / (1 - s))
        return ea / (ea + eb)


def cutoff_test_vector(ell: int, cutoff: CutoffSpec,
                       precision: int = DEFAULT_PRECISION) -> FinSuppSeq:
    """u = cutoff * canonical parameter sequence, as an explicit finite vector.

    This is the slow exact-route construction used to cross-check the
    vectorized probe sums at small N.
    """
    g = g_param(WeightSpec.canonical(ell), precision)
    end = cutoff.support_end
    vals = []
    with context(precision + 16):
        for n in range(ell, end + 1):
            xi = cutoff.value_mpfr(n, precision + 16)
            vals.append(xi * g.eval(n, precision + 16))
    return FinSuppSeq(ell, vals, precision=precision)


def criticality_probe(ell: int, Ns, eps: float = 0.25) -> list[CriticalityPoint]:
    """Remainder decay for plateau-then-decay cutoffs of growing size N.

    Contract along increasing N: the total remainder decreases like 1/log N,
    so remainder * ln N stays in a bounded band.  Computed in vectorized
    float64 with series-stabilized stencils (windows reach N^2 points).
    """
    pts = []
    for N in sorted(Ns):
        if N < ell + 2:
            raise ValueError(f"each N must be at least ell+2 = {ell + 2}, got {N}")
        total = sum(_fastprobe.remainder_cutoff_sum(ell, k, "criticality", N, eps)
                    for k in range(ell))
        pts.append(CriticalityPoint(N, total, total * math.log(N)))
    return pts


def optimality_probe(ell: int, M: int, Ns, eps: float = 0.25) -> list[OptimalityPoint]:
    """Remainder-to-weight ratio for plateau cutoffs supported in [N, 2N^3].

    The test vector vanishes up to N >= M, so it probes the inequality's
    constant on vectors supported arbitrarily far out; the ratio must
    decrease along increasing N while the weighted sum keeps a positive
    floor.
    """
    if M < ell:
        raise ValueError(f"M must be at least ell = {ell}, got {M}")
    pts = []
    for N in sorted(Ns):
        if N < M:
            raise ValueError(f"each N must be at least M = {M}, got {N}")
        rem = sum(_fastprobe.remainder_cutoff_sum(ell, k, "plateau", N, eps)
                  for k in range(ell))
        wsum = _fastprobe.weight_sum_optimality(ell, N, eps)
        pts.append(OptimalityPoint(N, rem, wsum, rem / wsum))
    return pts


def attainability_probe(ell: int, q, horizon: int,
                        precision: int = DEFAULT_PRECISION) -> AttainabilityReport:
    """Partial sums of both sides of the inequality for u = the q-family
    parameter sequence hard-truncated at the horizon.

    Admissible only for q in (0, 1/2), where the weighted square sum of the
    parameter sequence converges; the gap between the sides is exactly the
    remainder mass concentrated at the truncation edge (the interior
    annihilates), which is reported alongside.
    """
    q = Fraction(q)
    if not 0 < q < Fraction(1, 2):
        raise ValueError(
            f"q must lie in (0, 1/2): the weighted sum diverges for q >= 1/2 (got {q})"
        )
    if horizon < ell + 2:
        raise ValueError(f"horizon must exceed ell+2, got {horizon}")
    prec = precision
    work = prec + 64
    spec = WeightSpec.q_family(ell, q)
    g = g_param(spec, prec)
    u = FinSuppSeq.from_lattice(g, ell, horizon, prec)
    lhs = quad_form(u, ell, _work_precision=work).value
    num_taps = (DiffExpr.neg_lap() ** ell).taps
    with context(work):
        rhs = mpfr(0)
        for n in range(ell, horizon + 1):
            gn = g.eval(n, work)
            rho_n = apply_taps_accurate(g.eval, num_taps, n, work) / gn
            rhs += rho_n * gn * gn
        gap = lhs - rhs
    with context(work):
        boundary = gmpy2.fsum([
            _remainder_raw(g, u, ell, k, work, n_lo=horizon - k - 2, n_hi=horizon + 1)
            for k in range(ell)
        ])
    return AttainabilityReport(
        Real(mpfr(lhs, prec), prec),
        Real(mpfr(rhs, prec), prec),
        Real(mpfr(gap, prec), prec),
        Real(mpfr(boundary, prec), prec),
    )


# ---------------------------------------------------------------------------
# admissible range of the cubic-radicand family
# ---------------------------------------------------------------------------

def alpha2_feasible(alpha, n_check: int, precision: int = 160) -> tuple[bool, int | None]:
    """Does g(alpha) = sqrt(n(n-1)(n-alpha)) keep a nonnegative second
    negative-Laplacian difference on [2, n_check]?  Returns the first
    violating index otherwise."""
    spec = WeightSpec.alpha2(Fraction(alpha))
    g = g_param(spec, min(precision, 1024))
    taps = (DiffExpr.neg_lap() ** 2).taps
    for n in range(2, n_check + 1):
        if taps_sign(g.eval, taps, n, precision) < 0:
            return False, n
    return True, None


def alpha_admissible_range(n_check: int, tol, precision: int = 160) -> tuple[float, float]:
    """Locate, by bisection to within tol, the endpoints of the alpha interval
    on which the cubic-radicand Rellich family satisfies the convexity scan
    on [2, n_check].  (Positivity and monotonicity only require alpha < 2.)
    """
    if n_check < 1000:
        raise ValueError(f"n_check must be at least 1000, got {n_check}")
    tol = Fraction(tol)

    def feasible(a: Fraction) -> bool:
        return alpha2_feasible(a, n_check, precision)[0]

    inside = Fraction(1)
    if not feasible(inside):
        raise RuntimeError("alpha = 1 unexpectedly infeasible; scan inconsistent")
    lo_out, hi_out = Fraction(1, 2), Fraction(19, 10)
    if feasible(lo_out) or feasible(hi_out):
        raise RuntimeError("bracketing endpoints unexpectedly feasible")

    def bisect(bad: Fraction, good: Fraction) -> Fraction:
        while abs(good - bad) > tol:
            mid = (good + bad) / 2
            if feasible(mid):
                good = mid
            else:
                bad = mid
        return (good + bad) / 2

    return float(bisect(lo_out, inside)), float(bisect(hi_out, inside))
