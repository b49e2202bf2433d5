"""Finite truncations of the semi-infinite matrix picture.

The ell-th power of the negative discrete Laplacian on indices ell, ell+1, ...
is a Hermitian banded Toeplitz matrix with signed binomial diagonals.  It
factorizes as diag(weight) plus a sum of products (R_k)^T R_k of lower
Hessenberg band factors built from the parameter sequence; this module
constructs all pieces explicitly and measures the factorization residual on
truncation-safe interior windows.

Truncation margins are explicit everywhere: the identity lives on
semi-infinite matrices, so rows near the cut are excluded from comparisons
rather than silently patched.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import gmpy2
from gmpy2 import mpfr

from .lattice import DiffExpr, LatticeSeq, apply_taps_accurate
from .mpreal import DEFAULT_PRECISION, Real, context, to_mpfr
from .verify import AssumptionViolation

__all__ = [
    "BandMatrix",
    "toeplitz_power",
    "dirichlet_power",
    "corner_defect",
    "remainder_factor",
    "FactorizationReport",
    "factorization_check",
]


class BandMatrix:
    """Square matrix stored by diagonals; entries off the band are exact zeros.

    Diagonal d = column - row runs over [-lower_bw, upper_bw].
    """

    __slots__ = ("size", "lower_bw", "upper_bw", "_diags", "precision")

    def __init__(self, size: int, lower_bw: int, upper_bw: int,
                 diags: dict[int, list], precision: int = DEFAULT_PRECISION):
        if size < lower_bw + upper_bw + 1:
            raise ValueError(
                f"size {size} too small for bandwidths ({lower_bw}, {upper_bw})"
            )
        self.size = size
        self.lower_bw = lower_bw
        self.upper_bw = upper_bw
        self.precision = precision
        store: dict[int, tuple] = {}
        for d in range(-lower_bw, upper_bw + 1):
            vals = diags.get(d, [])
            expect = size - abs(d)
            if len(vals) != expect:
                raise ValueError(f"diagonal {d} must have {expect} entries, got {len(vals)}")
            store[d] = tuple(to_mpfr(v, precision) for v in vals)
        self._diags = store

    @classmethod
    def build(cls, size: int, lower_bw: int, upper_bw: int, entry_fn,
              precision: int = DEFAULT_PRECISION) -> "BandMatrix":
        """entry_fn(i, j) -> value, called only inside the band."""
        diags = {}
        for d in range(-lower_bw, upper_bw + 1):
            rows = range(max(0, -d), size - max(0, d))
            diags[d] = [entry_fn(i, i + d) for i in rows]
        return cls(size, lower_bw, upper_bw, diags, precision)

    def entry(self, i: int, j: int) -> mpfr:
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise IndexError((i, j))
        d = j - i
        if d < -self.lower_bw or d > self.upper_bw:
            return mpfr(0)
        return self._diags[d][i - max(0, -d)]

    def get(self, i: int, j: int) -> Real:
        return Real(self.entry(i, j), self.precision)

    def dense(self) -> list[list[Real]]:
        return [[self.get(i, j) for j in range(self.size)] for i in range(self.size)]

    def transpose(self) -> "BandMatrix":
        diags = {-d: list(vals) for d, vals in self._diags.items()}
        return BandMatrix(self.size, self.upper_bw, self.lower_bw, diags, self.precision)

    def matmul(self, other: "BandMatrix", precision: int | None = None) -> "BandMatrix":
        if self.size != other.size:
            raise ValueError("size mismatch")
        prec = precision if precision is not None else min(self.precision, other.precision)
        lb = min(self.lower_bw + other.lower_bw, self.size - 1)
        ub = min(self.upper_bw + other.upper_bw, self.size - 1)

        with context(prec):
            def entry_fn(i: int, j: int) -> mpfr:
                k_lo = max(0, i - self.lower_bw, j - other.upper_bw)
                k_hi = min(self.size - 1, i + self.upper_bw, j + other.lower_bw)
                if k_hi < k_lo:
                    return mpfr(0)
                return gmpy2.fsum([self.entry(i, k) * other.entry(k, j)
                                   for k in range(k_lo, k_hi + 1)])

            return BandMatrix.build(self.size, lb, ub, entry_fn, prec)

    def sub(self, other: "BandMatrix", precision: int | None = None) -> "BandMatrix":
        if self.size != other.size:
            raise ValueError("size mismatch")
        prec = precision if precision is not None else min(self.precision, other.precision)
        lb = max(self.lower_bw, other.lower_bw)
        ub = max(self.upper_bw, other.upper_bw)
        with context(prec):
            return BandMatrix.build(
                self.size, lb, ub,
                lambda i, j: self.entry(i, j) - other.entry(i, j), prec)

    def matvec(self, vec) -> list[mpfr]:
        with context(self.precision):
            out = []
            for i in range(self.size):
                j_lo = max(0, i - self.lower_bw)
                j_hi = min(self.size - 1, i + self.upper_bw)
                out.append(gmpy2.fsum([self.entry(i, j) * to_mpfr(vec[j], self.precision)
                                       for j in range(j_lo, j_hi + 1)]))
        return out

    def max_abs_window(self, row_lo: int, row_hi: int, col_lo: int, col_hi: int) -> mpfr:
        """Largest |entry| with row in [row_lo, row_hi) and col in [col_lo, col_hi)."""
        best = mpfr(0)
        with context(self.precision):
            for d, vals in self._diags.items():
                r0 = max(0, -d)
                for idx, v in enumerate(vals):
                    i = r0 + idx
                    j = i + d
                    if row_lo <= i < row_hi and col_lo <= j < col_hi and abs(v) > best:
                        best = abs(v)
        return best

    def to_csv(self) -> str:
        """Dense entries, row-major, one row per line."""
        lines = []
        for i in range(self.size):
            lines.append(",".join(self.get(i, j).decimal() for j in range(self.size)))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# the two matrix powers and their corner defect
# ---------------------------------------------------------------------------

def toeplitz_power(ell: int, size: int, precision: int = DEFAULT_PRECISION) -> BandMatrix:
    """Banded Toeplitz matrix of the ell-th negative-Laplacian power:
    entry (i, j) = (-1)^(j-i) C(2 ell, ell + j - i) for |j - i| <= ell."""
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    if size < 2 * ell + 1:
        raise ValueError(f"size must be at least 2*ell+1 = {2 * ell + 1}, got {size}")
    diags = {}
    for d in range(-ell, ell + 1):
        v = (-1) ** d * comb(2 * ell, ell + d)
        diags[d] = [v] * (size - abs(d))
    return BandMatrix(size, ell, ell, diags, precision)


def dirichlet_power(ell: int, size: int, precision: int = DEFAULT_PRECISION) -> BandMatrix:
    """ell-th power of the half-line Dirichlet second-difference matrix
    (tridiagonal -1, 2, -1 truncated at the corner), by repeated multiplication.

    Entries are small integers, hence exact at the working precision.  Away
    from the top-left (ell-1) x (ell-1) block and the bottom truncation
    boundary it agrees with the Toeplitz power.
    """
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    if size < 2 * ell + 1:
        raise ValueError(f"size must be at least 2*ell+1 = {2 * ell + 1}, got {size}")
    base = toeplitz_power(1, size, precision)
    out = base
    for _ in range(ell - 1):
        out = out.matmul(base, precision)
    return out


def corner_defect(ell: int, precision: int = DEFAULT_PRECISION) -> list[list[Real]]:
    """Top-left (ell-1) x (ell-1) block of dirichlet_power - toeplitz_power.

    Computed at a size large enough that the shown block is truncation-free;
    all other interior entries of the difference vanish.
    """
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    if ell == 1:
        return []
    size = 4 * ell + 4
    diff = dirichlet_power(ell, size, precision).sub(toeplitz_power(ell, size, precision))
    return [[diff.get(i, j) for j in range(ell - 1)] for i in range(ell - 1)]


# ---------------------------------------------------------------------------
# remainder factors and the factorization identity
# ---------------------------------------------------------------------------

def remainder_factor(g: LatticeSeq, ell: int, k: int, size: int,
                     precision: int = DEFAULT_PRECISION) -> BandMatrix:
    """Band matrix of the order-k remainder factor on coordinates ell..ell+size-1.

    Row r acts as the remainder operator's row at lattice index ell+r-k (the
    factor absorbs the k-step back shift), giving a (k+2)-diagonal lower
    Hessenberg matrix: k subdiagonals, the main diagonal, one superdiagonal.
    """
    if not 0 <= k <= ell - 1:
        raise ValueError(f"k must lie in [0, ell-1] = [0, {ell - 1}], got {k}")
    work = precision + 64
    dk_taps = (DiffExpr.divg() ** k).taps
    pref_taps = None
    if k < ell - 1:
        pref_taps = ((DiffExpr.neg_lap() ** (ell - 1 - k)) * (DiffExpr.divg() ** (k + 1))).taps
    dk1_taps = (DiffExpr.divg() ** (k + 1)).taps

    # row r implements: sqrt(pref_m) [ sqrt(gk_m/gk_{m+1}) (div^k u)_{m+1}
    #                                 - sqrt(gk_{m+1}/gk_m) (div^k u)_m ],  m = ell + r - k
    rows: list[dict[int, mpfr]] = []
    with context(work):
        for r in range(size):
            m = ell + r - k
            gk_m = apply_taps_accurate(g.eval, dk_taps, m, work)
            gk_m1 = apply_taps_accurate(g.eval, dk_taps, m + 1, work)
            if gk_m <= 0:
                raise AssumptionViolation("a1", k, m, gk_m)
            if gk_m1 <= 0:
                raise AssumptionViolation("a1", k, m + 1, gk_m1)
            if pref_taps is not None:
                num = apply_taps_accurate(g.eval, pref_taps, m, work)
                den = apply_taps_accurate(g.eval, dk1_taps, m, work)
                if den <= 0:
                    raise AssumptionViolation("a1", k + 1, m, den)
                if num < 0:
                    raise AssumptionViolation("a2", k, m, num)
                s_pref = gmpy2.sqrt(num / den)
            else:
                s_pref = mpfr(1)
            a = gmpy2.sqrt(gk_m / gk_m1)
            b = gmpy2.sqrt(gk_m1 / gk_m)
            coeffs: dict[int, mpfr] = {}
            for i in range(k + 1):  # (div^k u)_m term
                col = r - k + i
                coeffs[col] = coeffs.get(col, mpfr(0)) - s_pref * b * comb(k, i) * (-1) ** (k - i)
            for i in range(k + 1):  # (div^k u)_{m+1} term
                col = r - k + i + 1
                coeffs[col] = coeffs.get(col, mpfr(0)) + s_pref * a * comb(k, i) * (-1) ** (k - i)
            rows.append({c: v for c, v in coeffs.items() if 0 <= c < size})

    diags: dict[int, list] = {d: [] for d in range(-k, 2)}
    for d in range(-k, 2):
        for i in range(max(0, -d), size - max(0, d)):
            diags[d].append(rows[i].get(i + d, mpfr(0)))
    return BandMatrix(size, k, 1, diags, precision)


@dataclass(frozen=True)
class FactorizationReport:
    ell: int
    size: int
    top_margin: int
    bottom_margin: int
    max_residual: Real


def factorization_check(g: LatticeSeq, ell: int, size: int,
                        precision: int = DEFAULT_PRECISION,
                        top_margin: int | None = None,
                        bottom_margin: int | None = None,
                        include_orders=None) -> FactorizationReport:
    """Interior entrywise residual of
    toeplitz_power - diag(weight) - sum_k (factor_k)^T factor_k.

    Rows/columns within the margins are excluded: the identity holds between
    semi-infinite matrices and truncation breaks it near the cut.
    ``include_orders`` restricts which remainder factors enter (useful for
    mutation checks); omitting any factor must produce a visible residual.
    """
    if size < 4 * ell:
        raise ValueError(f"size must be at least 4*ell = {4 * ell}, got {size}")
    top = top_margin if top_margin is not None else ell
    bottom = bottom_margin if bottom_margin is not None else 2 * ell
    orders = list(range(ell)) if include_orders is None else sorted(include_orders)
    work = precision + 64

    T = toeplitz_power(ell, size, work)
    num_taps = (DiffExpr.neg_lap() ** ell).taps
    with context(work):
        rho_diag = []
        for r in range(size):
            n = ell + r
            gn = g.eval(n, work)
            if gn <= 0:
                raise AssumptionViolation("a1", 0, n, gn)
            rho_diag.append(apply_taps_accurate(g.eval, num_taps, n, work) / gn)
    D = BandMatrix(size, 0, 0, {0: rho_diag}, work)
    M = T.sub(D, work)
    for k in orders:
        Rk = remainder_factor(g, ell, k, size, work)
        M = M.sub(Rk.transpose().matmul(Rk, work), work)
    resid = M.max_abs_window(top, size - bottom, top, size - bottom)
    return FactorizationReport(ell, size, top, bottom,
                               Real(mpfr(resid, precision), precision))
