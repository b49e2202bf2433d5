"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines as the suite executes.  Tolerances are pinned here, not configurable.
"""

import math
from fractions import Fraction as F

import gmpy2
from gmpy2 import mpfr, mpq

from hrbweights.exactmath import (
    hardy_even_coeff,
    pochhammer,
    r_coeff,
    r_conjecture_check,
)
from hrbweights.verify import (
    alpha_admissible_range,
    attainability_probe,
    criticality_probe,
    identity_check,
    optimality_probe,
    random_test_vector,
)
from hrbweights.matrices import (
    corner_defect,
    dirichlet_power,
    factorization_check,
    toeplitz_power,
)
from hrbweights.weights import (
    WeightSpec,
    g_param,
    lower_bound_chain,
    rho_eval,
    rho_expansion_table,
)


def report(num: int, text: str, ok: bool) -> None:
    print(f"ACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, f"criterion {num} failed: {text}"


def test_criterion_01_exact_leading_coefficients():
    ok = True
    for ell in range(1, 9):
        half_sq = pochhammer(F(1, 2), ell) ** 2
        ok &= r_coeff(2 * ell, ell) == half_sq
        ok &= r_coeff(2 * ell + 1, ell) == \
            F(ell * (ell - 1) * (2 * ell + 1), 2 * (2 * ell - 1)) * half_sq
    report(1, "leading series coefficients match the closed forms exactly, "
              "ell in [1,8], zero tolerance", ok)


def test_criterion_02_expansion_tables():
    expected = {
        2: [F(9, 16), F(3, 2), F(297, 128)],
        3: [F(225, 64), F(405, 16), F(114975, 1024)],
        4: [F(11025, 256), F(4725, 8), F(4879665, 1024)],
        5: [F(893025, 1024), F(2480625, 128), F(4023077625, 16384)],
    }
    ok = True
    for ell, coeffs in expected.items():
        table = rho_expansion_table(ell, 2 * ell + 2)
        ok &= [c for _, c in table.coefficients] == coeffs
    report(2, "all twelve published expansion coefficients reproduced exactly "
              "(ell = 2..5)", ok)


def test_criterion_03_positivity_and_hardy_structure():
    ok = all(r_coeff(k, ell) > 0
             for ell in range(2, 7) for k in range(2 * ell, 61))
    ok &= all(r_coeff(2 * k + 1, 1) == 0 for k in range(1, 31))
    ok &= all(r_coeff(2 * k, 1) == hardy_even_coeff(k) for k in range(1, 31))
    report(3, "series coefficients positive for ell in [2,6], k <= 60; "
              "ell = 1 odd/even structure exact for k <= 30", ok)


def test_criterion_04_identity_residuals():
    worst = {128: 0.0, 256: 0.0}
    for prec in (128, 256):
        for ell in range(1, 6):
            g = g_param(WeightSpec.canonical(ell), prec)
            for trial in range(100):
                u = random_test_vector(10_000 + 131 * ell + trial, ell, 12, prec)
                rep = identity_check(g, u, ell)
                worst[prec] = max(worst[prec], abs(float(rep.relative_residual)))
    ok = worst[128] <= 2.0 ** -108
    drop_ok = worst[256] <= max(worst[128] * 2.0 ** -50, 2.0 ** -296)
    report(4, f"identity residuals: max 2^{math.log2(max(worst[128], 1e-300)):.1f} "
              f"at 128 bits (<= 2^-108), drop to 2^{math.log2(max(worst[256], 1e-300)):.1f} "
              f"at 256 bits (>= 2^50 drop)", ok and drop_ok)


def test_criterion_05_inequality_chain_and_kpp():
    prec_for = {2: 256, 3: 256, 4: 320, 5: 320}
    ok = True
    for ell in range(2, 6):
        prec = prec_for[ell]
        for n in range(ell, 10**4 + 1):
            if not lower_bound_chain(ell, n, prec).ordered:
                ok = False
                print(f"   ordering violated at ell={ell}, n={n}")
                break
    kpp_ok = True
    with gmpy2.context(precision=128):
        for n in range(1, 10**6 + 1):
            v = 2 - gmpy2.sqrt(mpfr(mpq(n - 1, n))) - gmpy2.sqrt(mpfr(mpq(n + 1, n)))
            if v * (4 * n * n) <= 1:
                kpp_ok = False
                print(f"   improved Hardy weight not above 1/(4n^2) at n={n}")
                break
    report(5, "strict three-term ordering for ell in [2,5], n in [ell, 1e4]; "
              "improved Hardy weight beats 1/(4n^2) for n in [1, 1e6]",
           ok and kpp_ok)


def test_criterion_06_matrix_picture():
    T3 = toeplitz_power(3, 16)
    D3 = dirichlet_power(3, 16)
    ok = True
    for i in range(8):
        for j in range(8):
            t = (-1) ** (j - i) * math.comb(6, 3 + j - i) if abs(j - i) <= 3 else 0
            d = {(0, 0): 14, (0, 1): -14, (1, 0): -14}.get((i, j), t)
            ok &= float(T3.entry(i, j)) == t and float(D3.entry(i, j)) == d
    block = corner_defect(3)
    ok &= [[float(x) for x in row] for row in block] == [[-6, 1], [1, 0]]
    worst = 0.0
    for ell in range(1, 5):
        g = g_param(WeightSpec.canonical(ell), 128)
        worst = max(worst, float(factorization_check(g, ell, 64, 128).max_residual))
    ok &= worst <= 2.0 ** -100
    report(6, f"matrix displays and corner defect exact; factorization interior "
              f"residual 2^{math.log2(max(worst, 1e-300)):.1f} <= 2^-100 "
              f"(ell in [1,4], size 64, 128 bits)", ok)


def test_criterion_07_alpha_range():
    lo, hi = alpha_admissible_range(10**4, F(1, 10**4))
    ok = abs(lo - 0.847) < 5e-3 and abs(hi - 1.307) < 5e-3
    report(7, f"admissible alpha interval [{lo:.4f}, {hi:.4f}] within 5e-3 of "
              f"(0.847, 1.307)", ok)


def test_criterion_08_asymptotic_constants():
    n = 10**4
    ok = True
    for ell, q in ((1, F(1, 4)), (2, F(1, 2)), (3, F(3, 4))):
        val = float(rho_eval(WeightSpec.q_family(ell, q), n, 320).value)
        lim = float(pochhammer(q, ell) * pochhammer(1 - q, ell))
        ok &= abs(val * float(n) ** (2 * ell) - lim) < 0.01 * lim
    gks = float(rho_eval(WeightSpec.gks(), n, 256).value)
    hy = float(rho_eval(WeightSpec.hy(20), n, 256).value)
    ok &= abs(gks * n**4 - 9 / 16) < 0.01 * 9 / 16
    ok &= abs(hy * n**4 - 9 / 16) < 0.01 * 9 / 16
    c5_hy = (hy - 9 / 16 / n**4) * n**5
    ok &= abs(c5_hy - 15 / 16) < 0.05 * 15 / 16
    r2 = float(rho_eval(WeightSpec.canonical(2), n, 256).value)
    c5_opt = (r2 - 9 / 16 / n**4) * n**5
    ok &= abs(c5_opt - 3 / 2) < 0.05 * 3 / 2
    report(8, f"scaled limits within 1%; fitted 1/n^5 coefficients "
              f"{c5_hy:.4f} (~15/16) and {c5_opt:.4f} (~3/2) within 5%", ok)


def test_criterion_09_optimality_probes():
    ok = True
    for ell in (1, 2):
        pts = criticality_probe(ell, [10, 100, 1000, 10000])
        ok &= pts[0].total_remainder > pts[1].total_remainder > pts[2].total_remainder
        band = [p.remainder_log_product for p in pts if p.N in (100, 10000)]
        ok &= max(band) / min(band) < 3
        opt = optimality_probe(ell, ell, [10, 30, 100])
        ok &= opt[0].ratio > opt[1].ratio > opt[2].ratio
    accepted = attainability_probe(1, F(1, 4), 2000)
    ok &= float(accepted.rhs_partial) > 0
    rejected = False
    try:
        attainability_probe(1, F(1, 2), 2000)
    except ValueError:
        rejected = True
    ok &= rejected
    report(9, "criticality remainders decrease with bounded remainder*logN band "
              "(factor < 3 between N=1e2 and 1e4); optimality ratios decrease; "
              "attainability accepts q=1/4 and rejects q=1/2", ok)


def test_criterion_10_family_dominance():
    ok = True
    for ell in (2, 3):
        canon = WeightSpec.canonical(ell)
        for q in (F(3, 5), F(3, 4), F(9, 10)):
            spec = WeightSpec.q_family(ell, q)
            for n in range(ell, 501):
                if not float(rho_eval(spec, n, 192)) < float(rho_eval(canon, n, 192)):
                    ok = False
                    print(f"   dominance violated at ell={ell}, q={q}, n={n}")
                    break
    # the integer-exponent end point of the family gives the zero weight
    from hrbweights.lattice import DiffExpr, apply_taps_accurate
    from hrbweights.weights import _q_seq_rule

    for ell in (2, 3):
        rule = _q_seq_rule(ell, F(1))
        taps = (DiffExpr.neg_lap() ** ell).taps
        for n in range(ell, 501):
            if abs(float(apply_taps_accurate(rule, taps, n, 128))) > 2.0 ** -88:
                ok = False
                print(f"   q=1 weight not zero at ell={ell}, n={n}")
                break
    report(10, "q-family weights strictly below the optimal weight for "
               "q in {0.6, 0.75, 0.9} on [ell, 500]; q = 1 weight vanishes", ok)


def test_criterion_11_conjecture_scan():
    counterexamples = []
    for ell in range(2, 7):
        for entry in r_conjecture_check(ell, 60):
            if not entry.is_integer:
                counterexamples.append((ell, entry.k, entry.scaled))
    if counterexamples:
        print(f"   counterexamples found: {counterexamples}")
    else:
        print("   4^(k-ell) r_k integral for all ell in [2,6], k in [2ell, 60]")
    report(11, "integrality scan completed over ell in [2,6], k in [2ell, 60] "
               f"({'counterexamples reported' if counterexamples else 'all integers'})",
           True)
