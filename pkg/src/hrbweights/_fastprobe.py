"""Vectorized float64 numerics for the cutoff probes.

The criticality/optimality probes sum remainder terms over windows that reach
n ~ 1e8, far beyond what per-point arbitrary-precision loops can do at desk
scale.  Direct high-order differences of the parameter sequence cancel
catastrophically in doubles, so this module evaluates every stencil through
an exact-coefficient series in 1/n once n is moderately large (the stencil
moments vanish below the operator order, which removes the cancellation),
and rewrites the remainder bracket through the discrete product rule so that
cutoff differences are taken on O(1) cutoff values only.

Accuracy is ~1e-7 relative in the worst corners, far tighter than the
probes' qualitative contracts; the mpfr remainder path cross-checks these
sums at small window sizes in the test suite.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, log

import numpy as np

from .exactmath import binom_rational, stirling_first
from .lattice import DiffExpr

CHUNK = 1 << 19
_QMAX = 48  # stored series length (truncated adaptively per chunk)

__all__ = [
    "eta_profile",
    "cutoff_values",
    "remainder_cutoff_sum",
    "weight_sum_optimality",
    "canonical_stencil_eval",
]


# ---------------------------------------------------------------------------
# smooth transition profile and cutoff shapes
# ---------------------------------------------------------------------------

def eta_profile(t: np.ndarray, eps: float = 0.25) -> np.ndarray:
    """C-infinity step: 0 below eps, 1 above 1-eps, exponential blend between."""
    s = (np.asarray(t) - eps) / (1.0 - 2.0 * eps)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    ea = np.exp(-1.0 / sm)
    eb = np.exp(-1.0 / (1.0 - sm))
    out[mid] = ea / (ea + eb)
    return out


def cutoff_values(x: np.ndarray, shape: str, N: int, eps: float = 0.25) -> np.ndarray:
    """Cutoff profile sampled at x (log-scale transitions of width log N).

    ``criticality``: 1 up to N, smooth decay on (N, N^2], 0 beyond.
    ``plateau``: 0 up to N, rise on (N, N^2], 1 on (N^2, 2N^2], fall on
    (2N^2, 2N^3], 0 beyond.
    """
    x = np.asarray(x)
    lx = np.log(np.maximum(x, x.dtype.type(1e-300)))
    lN = x.dtype.type(log(N)) if x.dtype == np.float64 else np.log(x.dtype.type(N))
    out = np.zeros_like(x)
    if shape == "criticality":
        decay = eta_profile((2.0 * lN - lx) / lN, eps)
        out = np.where(x <= N, 1.0, np.where(x <= N * N, decay, 0.0))
        return out
    if shape == "plateau":
        rise = eta_profile((lx - lN) / lN, eps)
        l2n3 = np.log(x.dtype.type(2) * x.dtype.type(N) ** 3)
        fall = eta_profile((l2n3 - lx) / lN, eps)
        out = np.where(x <= N, 0.0,
                       np.where(x <= N * N, rise,
                                np.where(x <= 2.0 * N * N, 1.0,
                                         np.where(x <= 2.0 * N**3, fall, 0.0))))
        return out
    raise ValueError(f"unknown cutoff shape {shape!r}")


# ---------------------------------------------------------------------------
# stable stencil evaluation on the canonical parameter sequence
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
class _CanonicalStencil:
    """(stencil o g)(n) for the canonical sequence g(x) = sqrt(x)(x-1)...(x-ell+1).

    Small n: direct stencil on g.  Large n: with s(ell, t) the first-kind
    Stirling numbers, g(x) = sum_t s(ell, t) x^(t-1/2) and

        (W g)(n) = sqrt(n) * n^(ell-1-p0) * P(1/n),

    where p0 is the operator order of W (its first nonvanishing moment) and P
    collects exact binomial-times-moment coefficients; no cancellation occurs
    because the vanishing moments have been removed symbolically.
    """

    def __init__(self, ell: int, expr: DiffExpr):
        self.ell = ell
        self.taps = [(o, float(c)) for o, c in expr.taps]
        # moments Z_p = sum_i c_i i^p vanish for p below the operator order
        moments: list[Fraction] = []
        p = 0
        while True:
            z = sum(c * Fraction(o) ** p for o, c in expr.taps)
            if z != 0 or p > 4 * ell + 8:
                break
            moments.append(z)
            p += 1
        self.p0 = p
        zvals = []
        for pp in range(p, p + _QMAX + ell):
            zvals.append(sum(c * Fraction(o) ** pp for o, c in expr.taps))
        # combined series:  sum_t s(ell,t) n^(t-1/2) sum_q C(t-1/2, p0+q) Z_{p0+q} n^-(p0+q)
        #   = sqrt(n) n^(ell-1-p0) * sum_d D_d (1/n)^d,  D_d = sum_t s(ell,t) a_{t, d-(ell-t)}
        D = [Fraction(0)] * (_QMAX + ell)
        for t in range(1, ell + 1):
            s = stirling_first(ell, t)
            if s == 0:
                continue
            nu = Fraction(2 * t - 1, 2)
            for q in range(_QMAX):
                d = (ell - t) + q
                if d < len(D):
                    D[d] += s * binom_rational(nu, self.p0 + q) * zvals[q]
        self.series = np.array([float(c) for c in D], dtype=np.float64)
        self.int_exponent = ell - 1 - self.p0
        self.max_span = max(abs(o) for o, _ in self.taps) if self.taps else 0
        # below the switch the direct stencil loses at most ~switch^order * eps;
        # above it the series moment ratio span/n is <= 1/4
        self.switch = max(12, 4 * self.max_span, 4 * ell)

    def _g_direct(self, x: np.ndarray) -> np.ndarray:
        xc = np.maximum(x, 0.0)
        out = np.sqrt(xc)
        for j in range(1, self.ell):
            out = out * (x - j)
        return np.where(x >= 0, out, 0.0)

    def __call__(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.float64)
        out = np.empty_like(n)
        small = n < self.switch
        if small.any():
            ns = n[small]
            acc = np.zeros_like(ns)
            for off, c in self.taps:
                acc += c * self._g_direct(ns + off)
            out[small] = acc
        big = ~small
        if big.any():
            nb = n[big]
            inv = 1.0 / nb
            # adaptive truncation: the moment tail decays like (span/n)^q, but
            # the combined polynomial also spreads ell-1 orders from the
            # falling-factorial mixing, which must always be kept
            if self.max_span:
                ratio = self.max_span / float(nb.min())
                q_moment = int(-41.5 / log(ratio)) + 2 if ratio < 0.5 else _QMAX
            else:
                q_moment = 1
            qmax = min(len(self.series), self.ell - 1 + q_moment + 2)
            acc = np.zeros_like(nb)
            for d in range(qmax - 1, -1, -1):
                acc = acc * inv + self.series[d]
            out[big] = np.sqrt(nb) * nb ** self.int_exponent * acc
        return out


def canonical_stencil_eval(ell: int, expr: DiffExpr, n: np.ndarray) -> np.ndarray:
    """Public wrapper (used by cross-validation tests)."""
    return _CanonicalStencil(ell, expr)(np.asarray(n, dtype=np.float64))


# ---------------------------------------------------------------------------
# remainder window sums
# ---------------------------------------------------------------------------

def _apply_taps_np(arr: np.ndarray, taps, length: int, base: int) -> np.ndarray:
    """sum_i c_i arr[base + j + i] for j in range(length); arr holds a margin.

    Keeps the input dtype; high-order cutoff differences cancel to ~1e-20 of
    the operand scale, so the cutoff array is sampled in extended precision
    and only the combined value is cast back to float64 by the caller.
    """
    out = np.zeros(length, dtype=arr.dtype)
    for off, c in taps:
        out += arr.dtype.type(float(c)) * arr[base + off: base + off + length]
    return out


def _remainder_window(ell: int, k: int, shape: str, N: int, eps: float,
                      lo: int, hi: int) -> float:
    """Sum of remainder terms pref_n * B_n^2 for n in [lo, hi].

    B_n is expanded through the discrete product rule applied to the cutoff
    times the parameter sequence:

        B_n = sum_j C(k,j) [gk_n * d(phi_j psi_j)_n - dgk_n phi_j(n) psi_j(n)]
                           / sqrt(gk_n gk_{n+1}),

    with phi_j cutoff-only factors (exact O(1) differences) and psi_j
    sequence-only factors (series-stable), so no catastrophic subtraction
    of large near-equal terms occurs.
    """
    D, M = DiffExpr.divg(), DiffExpr.midop()
    st_gk = _CanonicalStencil(ell, D ** k)
    st_dgk = _CanonicalStencil(ell, D ** (k + 1))
    st_pref = None
    if k < ell - 1:
        st_pref = _CanonicalStencil(ell, (DiffExpr.neg_lap() ** (ell - 1 - k)) * (D ** (k + 1)))
    st_psi = [_CanonicalStencil(ell, (D ** (k - j)) * (M ** j)) for j in range(k + 1)]
    st_mpsi = [_CanonicalStencil(ell, (D ** (k - j)) * (M ** (j + 1))) for j in range(k + 1)]
    st_dpsi = [_CanonicalStencil(ell, (D ** (k - j + 1)) * (M ** j)) for j in range(k + 1)]
    tp_phi = [((D ** j) * (M ** (k - j))).taps for j in range(k + 1)]
    tp_mphi = [((D ** j) * (M ** (k - j + 1))).taps for j in range(k + 1)]
    tp_dphi = [((D ** (j + 1)) * (M ** (k - j))).taps for j in range(k + 1)]
    binoms = [comb(k, j) for j in range(k + 1)]

    total = 0.0
    a = lo
    margin = k + 3
    while a <= hi:
        b = min(a + CHUNK, hi + 1)
        n = np.arange(a, b, dtype=np.float64)
        xi_ext = cutoff_values(np.arange(a, b + margin, dtype=np.longdouble), shape, N, eps)
        gk_ext = st_gk(np.arange(a, b + 1, dtype=np.float64))
        gk_n, gk_np1 = gk_ext[:-1], gk_ext[1:]
        dgk = st_dgk(n)
        if st_pref is not None:
            pref = st_pref(n) / dgk
        else:
            pref = 1.0
        length = b - a
        bracket = np.zeros(length, dtype=np.float64)
        for j in range(k + 1):
            phi = _apply_taps_np(xi_ext, tp_phi[j], length, 0).astype(np.float64)
            mphi = _apply_taps_np(xi_ext, tp_mphi[j], length, 0).astype(np.float64)
            dphi = _apply_taps_np(xi_ext, tp_dphi[j], length, 0).astype(np.float64)
            psi = st_psi[j](n)
            mpsi = st_mpsi[j](n)
            dpsi = st_dpsi[j](n)
            bracket += binoms[j] * (gk_n * (dphi * mpsi + mphi * dpsi) - dgk * phi * psi)
        bracket /= np.sqrt(gk_n * gk_np1)
        total += float(np.sum(pref * bracket * bracket))
        a = b
    return total


def remainder_cutoff_sum(ell: int, k: int, shape: str, N: int, eps: float = 0.25) -> float:
    """Total remainder term of order k for the cutoff test vector of size N.

    Only the cutoff's transition windows contribute: wherever the cutoff is
    locally constant the product-rule bracket vanishes identically.
    """
    if shape == "criticality":
        windows = [(max(ell - k, N - k - 3), N * N + k + 3)]
    elif shape == "plateau":
        windows = [(max(ell - k, N - k - 3), N * N + k + 3),
                   (max(ell - k, 2 * N * N - k - 3), 2 * N**3 + k + 3)]
    else:
        raise ValueError(f"unknown cutoff shape {shape!r}")
    return sum(_remainder_window(ell, k, shape, N, eps, lo, hi) for lo, hi in windows)


def weight_sum_optimality(ell: int, N: int, eps: float = 0.25) -> float:
    """sum_n rho_n |xi_n g_n|^2 for the plateau cutoff (rho the canonical weight)."""
    st_num = _CanonicalStencil(ell, DiffExpr.neg_lap() ** ell)
    st_g = _CanonicalStencil(ell, DiffExpr.identity())
    total = 0.0
    a = max(ell, N + 1)
    hi = 2 * N**3
    while a <= hi:
        b = min(a + CHUNK, hi + 1)
        n = np.arange(a, b, dtype=np.float64)
        xi = cutoff_values(n, "plateau", N, eps)
        # rho * (xi g)^2 = num * g * xi^2  (avoids the quotient)
        total += float(np.sum(st_num(n) * st_g(n) * xi * xi))
        a = b
    return total
