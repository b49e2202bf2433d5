"""Verification engine: identities, remainders, assumption scans, probes."""

import math
from fractions import Fraction as F

import gmpy2
import pytest
from gmpy2 import mpfr

from hrbweights import _fastprobe
from hrbweights.lattice import DiffExpr, FinSuppSeq, LatticeSeq, apply_taps_accurate
from hrbweights.verify import (
    AssumptionViolation,
    CutoffSpec,
    alpha2_feasible,
    alpha_admissible_range,
    assumptions_check,
    attainability_probe,
    criticality_probe,
    cutoff_test_vector,
    identity_check,
    inequality_check,
    optimality_probe,
    random_test_vector,
    remainder,
    weighted_hardy_check,
)
from hrbweights.weights import WeightSpec, g_param, rho_eval
from hrbweights.weights import _q_seq_rule


def canonical(ell, prec=128):
    return g_param(WeightSpec.canonical(ell), prec)


def const_seq(value, prec=128):
    vq = F(value)
    return LatticeSeq(lambda n, p: mpfr(gmpy2.mpq(vq.numerator, vq.denominator), p),
                      -(1 << 62), prec)


class TestRandomVectors:
    def test_reproducible_and_in_range(self):
        u1 = random_test_vector(42, 3, 12, 128)
        u2 = random_test_vector(42, 3, 12, 128)
        assert u1 == u2
        assert u1.offset == 3 and len(u1) == 12
        assert all(-1 <= float(u1.at(n)) <= 1 for n in range(3, 15))
        assert random_test_vector(43, 3, 12, 128) != u1

    def test_precision_does_not_change_draws(self):
        u1 = random_test_vector(7, 1, 8, 64)
        u2 = random_test_vector(7, 1, 8, 256)
        assert all(u1.at(n) == u2.at(n) for n in range(1, 9))


class TestRemainder:
    def test_spike_value(self):
        r = remainder(canonical(1), FinSuppSeq.delta(1, 128), 1, 0)
        assert abs(float(r) - math.sqrt(2)) < 1e-15

    def test_top_order_has_unit_prefactor(self):
        # k = ell-1 must be finite and nonnegative for any admissible vector
        for ell in (1, 2, 3, 4):
            u = random_test_vector(5, ell, 9, 128)
            r = remainder(canonical(ell), u, ell, ell - 1)
            assert float(r) >= 0

    def test_nonnegative_under_assumptions(self):
        for ell in (1, 2, 3, 5):
            g = canonical(ell)
            for t in range(6):
                u = random_test_vector(100 + t, ell, 10, 128)
                for k in range(ell):
                    assert float(remainder(g, u, ell, k)) >= 0

    def test_annihilation_on_window(self):
        # u proportional to the parameter sequence on a window: interior
        # remainder terms vanish
        ell = 2
        g = canonical(ell, 192)
        with gmpy2.context(precision=192):
            vals = [3 * g.eval(n, 192) for n in range(ell, 30)]
        u = FinSuppSeq(ell, vals, precision=192)
        from hrbweights.verify import _remainder_raw

        for k in range(ell):
            interior = _remainder_raw(g, u, ell, k, 256, n_lo=ell - k, n_hi=25 - k - 2)
            assert abs(float(interior)) < 1e-60, (k, float(interior))

    def test_domain_checks(self):
        g = canonical(2)
        u = random_test_vector(1, 2, 8, 128)
        with pytest.raises(ValueError):
            remainder(g, u, 2, 2)
        with pytest.raises(ValueError):
            remainder(g, FinSuppSeq.delta(1, 128), 2, 0)


class TestIdentity:
    def test_spike_worked_example(self):
        rep = identity_check(canonical(1), FinSuppSeq.delta(1, 128), 1)
        assert abs(float(rep.lhs) - 2) < 1e-30
        assert abs(float(rep.weight_term) - (2 - math.sqrt(2))) < 1e-15
        assert abs(float(rep.remainders[0]) - math.sqrt(2)) < 1e-15
        assert abs(float(rep.relative_residual)) < 2 ** -180

    def test_zero_vector(self):
        rep = identity_check(canonical(2), FinSuppSeq(2, [0, 0, 0], precision=128), 2)
        assert float(rep.lhs) == 0 and float(rep.residual) == 0
        assert all(float(r) == 0 for r in rep.remainders)

    @pytest.mark.parametrize("ell", [1, 2, 3, 4, 5])
    def test_residuals_tiny_across_precisions(self, ell):
        for prec in (64, 128, 256):
            g = canonical(ell, prec)
            worst = 0.0
            for t in range(8):
                u = random_test_vector(3000 + 17 * t, ell, 12, prec)
                rep = identity_check(g, u, ell)
                worst = max(worst, abs(float(rep.relative_residual)))
            assert worst <= 2.0 ** (-(prec - 20)), (ell, prec, worst)

    def test_residual_scales_with_precision(self):
        # roughly 2^-64 shrink per precision doubling step (rounding-dominated)
        g64, g128, g256 = canonical(1, 64), canonical(1, 128), canonical(1, 256)
        r = {}
        for prec, g in ((64, g64), (128, g128), (256, g256)):
            u = random_test_vector(77, 1, 12, prec)
            r[prec] = abs(float(identity_check(g, u, 1).relative_residual))
        # either the residual drops by >= 2^50 per doubling, or it is already
        # below the tolerance scale of the higher precision (e.g. exactly 0)
        assert r[128] <= max(r[64] * 2.0 ** -50, 2.0 ** -(128 + 40))
        assert r[256] <= max(r[128] * 2.0 ** -50, 2.0 ** -(256 + 40))

    def test_rejects_low_support(self):
        with pytest.raises(ValueError):
            identity_check(canonical(3), FinSuppSeq.delta(2, 128), 3)


class TestWeightedIdentity:
    def test_reduces_to_plain_identity_for_unit_weight(self):
        g = canonical(1)
        u = random_test_vector(11, 1, 10, 128)
        rep_w = weighted_hardy_check(const_seq(1), g, u)
        rep_p = identity_check(g, u, 1)
        assert abs(float(rep_w.relative_residual)) < 2 ** -150
        assert abs(float(rep_w.weight_term.value - rep_p.weight_term.value)) < 1e-50

    def test_zero_weight(self):
        rep = weighted_hardy_check(const_seq(0), canonical(1),
                                   random_test_vector(2, 1, 6, 128))
        assert float(rep.lhs) == 0 and float(rep.remainders[0]) == 0

    def test_random_positive_weight(self):
        import random

        rng = random.Random(99)
        V = LatticeSeq.from_window(0, [1 + rng.random() for _ in range(30)],
                                   fill=1, precision=128)
        g = LatticeSeq(_q_seq_rule(1, F(3, 4)), 1, 128)
        u = random_test_vector(13, 1, 10, 128)
        rep = weighted_hardy_check(V, g, u)
        assert abs(float(rep.relative_residual)) < 2 ** -150

    def test_rejects_nonpositive_parameter(self):
        bad = LatticeSeq(lambda n, p: mpfr(n - 5, p), 1, 128)  # zero at n=5
        with pytest.raises(AssumptionViolation):
            weighted_hardy_check(const_seq(1), bad, random_test_vector(1, 1, 8, 128))


class TestAssumptions:
    def test_canonical_passes(self):
        for ell in (1, 2, 3, 4, 5):
            rep = assumptions_check(canonical(ell), ell, 1000)
            assert rep.a1_ok and rep.a2_ok and rep.a2prime_ok and rep.a3strict_ok
            assert rep.first_violation is None
            assert "verified up to" in rep.note

    def test_forced_q_above_one_violates(self):
        g_bad = LatticeSeq(_q_seq_rule(1, F(3, 2)), 1, 128)
        rep = assumptions_check(g_bad, 1, 100)
        assert not (rep.a2prime_ok and rep.a3strict_ok)
        assert rep.first_violation is not None
        tag, k, n = rep.first_violation
        # re-evaluating the quantified inequality at the reported index
        # reproduces the violation
        taps = (DiffExpr.neg_lap() ** 1).taps
        v = apply_taps_accurate(g_bad.eval, taps, n, 128)
        assert float(v) < 0

    def test_alpha_half_violates_convexity_scan(self):
        ok, n_bad = alpha2_feasible(F(1, 2), 1000)
        assert not ok and n_bad is not None
        g = g_param(WeightSpec.alpha2(F(1, 2)), 160)
        taps = (DiffExpr.neg_lap() ** 2).taps
        assert float(apply_taps_accurate(g.eval, taps, n_bad, 160)) < 0
        rep = assumptions_check(g, 2, n_bad + 5)
        assert not rep.a2prime_ok

    def test_horizon_validation(self):
        with pytest.raises(ValueError):
            assumptions_check(canonical(2), 2, 1)


class TestInequality:
    def test_random_vectors_nonnegative_margin(self):
        spec = WeightSpec.canonical(2)
        for t in range(10):
            u = random_test_vector(500 + t, 2, 12, 128)
            rep = inequality_check(spec, u)
            assert float(rep.margin) >= -2.0 ** -100

    def test_spike_margin(self):
        for ell in (1, 2, 3):
            rep = inequality_check(WeightSpec.canonical(ell),
                                   FinSuppSeq.delta(ell, 128))
            expect = math.comb(2 * ell, ell) - float(rho_eval(WeightSpec.canonical(ell), ell))
            assert abs(float(rep.margin) - expect) < 1e-12
            assert float(rep.margin) >= 0

    def test_plateau_vector_has_small_margin(self):
        # u equal to the parameter sequence on a long window: only boundary
        # remainder terms contribute
        ell = 2
        g = canonical(ell, 128)
        u = FinSuppSeq(ell, [g.eval(n) for n in range(ell, 60)], precision=128)
        rep = inequality_check(WeightSpec.canonical(ell), u)
        assert 0 <= float(rep.margin) < float(rep.lhs)
        # margin is dominated by boundary terms of the remainder sums
        from hrbweights.verify import _remainder_raw

        with gmpy2.context(precision=224):
            boundary = gmpy2.fsum([
                _remainder_raw(g, u, ell, k, 224, n_lo=57 - k - 2)
                for k in range(ell)])
        assert abs(float(rep.margin) - float(boundary)) < 1e-25


class TestCutoffs:
    def test_shapes_and_ranges(self):
        import numpy as np

        for shape, N in (("criticality", 10), ("plateau", 10)):
            spec = CutoffSpec(N, shape)
            xs = np.arange(1, spec.support_end + 10, dtype=float)
            vals = _fastprobe.cutoff_values(xs, shape, N, 0.25)
            assert ((0 <= vals) & (vals <= 1)).all()
        crit = CutoffSpec(10, "criticality")
        assert crit.value(5) == 1.0 and crit.value(10) == 1.0
        assert crit.value(101) == 0.0
        plat = CutoffSpec(10, "plateau")
        assert plat.value(10) == 0.0 and plat.value(150) == 1.0
        assert plat.value(2001) == 0.0

    def test_scalar_mpfr_matches_float64(self):
        spec = CutoffSpec(13, "plateau")
        for x in (14, 40, 169, 300, 2000, 4000):
            a = float(spec.value_mpfr(x, 128))
            b = spec.value(x)
            assert abs(a - b) < 1e-13

    def test_validation(self):
        with pytest.raises(ValueError):
            CutoffSpec(10, "box")
        with pytest.raises(ValueError):
            CutoffSpec(10, "plateau", eps=0.7)


class TestProbeCrossValidation:
    @pytest.mark.parametrize("ell,N", [(1, 10), (2, 10), (3, 8)])
    def test_criticality_fast_equals_exact(self, ell, N):
        uN = cutoff_test_vector(ell, CutoffSpec(N, "criticality"), 192)
        g = canonical(ell, 192)
        slow = sum(float(remainder(g, uN, ell, k)) for k in range(ell))
        fast = sum(_fastprobe.remainder_cutoff_sum(ell, k, "criticality", N)
                   for k in range(ell))
        assert abs(slow - fast) / slow < 1e-8

    @pytest.mark.parametrize("ell", [1, 2])
    def test_plateau_fast_equals_exact(self, ell):
        N = 6
        spec = CutoffSpec(N, "plateau")
        uN = cutoff_test_vector(ell, spec, 192)
        g = canonical(ell, 192)
        slow = sum(float(remainder(g, uN, ell, k)) for k in range(ell))
        fast = sum(_fastprobe.remainder_cutoff_sum(ell, k, "plateau", N)
                   for k in range(ell))
        assert abs(slow - fast) / slow < 1e-8
        wslow = 0.0
        for n in range(ell, spec.support_end + 1):
            un = uN.at(n)
            if un != 0:
                with gmpy2.context(precision=256):
                    wslow += float(rho_eval(WeightSpec.canonical(ell), n, 192).value
                                   * un * un)
        wfast = _fastprobe.weight_sum_optimality(ell, N)
        assert abs(wslow - wfast) / wslow < 1e-8


class TestProbes:
    def test_criticality_monotone_decrease(self):
        for ell in (1, 2):
            pts = criticality_probe(ell, [10, 100, 1000])
            assert pts[0].total_remainder > pts[1].total_remainder > pts[2].total_remainder
            # remainder * log N stays bounded (coarse band within the scanned range)
            products = [p.remainder_log_product for p in pts]
            assert max(products) / min(products) < 20

    def test_optimality_ratio_decreases(self):
        for ell in (1, 2, 3):
            pts = optimality_probe(ell, ell, [10, 30, 100])
            assert pts[0].ratio > pts[1].ratio > pts[2].ratio
            assert pts[-1].weight_sum >= 0.5  # positive floor at N = 100

    def test_optimality_degenerate_smallest_window(self):
        pts = optimality_probe(2, 2, [2])
        assert len(pts) == 1 and math.isfinite(pts[0].ratio)

    def test_probe_validation(self):
        with pytest.raises(ValueError):
            criticality_probe(2, [3])
        with pytest.raises(ValueError):
            optimality_probe(2, 5, [4])


class TestAttainability:
    def test_accepts_small_q_and_is_cauchy(self):
        r1 = attainability_probe(1, F(1, 4), 1000)
        r2 = attainability_probe(1, F(1, 4), 10000)
        diff = abs(float(r2.rhs_partial.value - r1.rhs_partial.value))
        assert diff < 0.1 * float(r2.rhs_partial)

    def test_gap_is_boundary_remainder(self):
        rep = attainability_probe(1, F(1, 4), 800)
        assert abs(float(rep.gap.value - rep.boundary_remainder.value)) < \
            1e-25 * max(1.0, float(rep.gap))
        rep2 = attainability_probe(2, F(3, 10), 600)
        assert abs(float(rep2.gap.value - rep2.boundary_remainder.value)) < \
            1e-20 * max(1.0, float(rep2.gap))

    def test_rejects_half_and_above(self):
        for q in (F(1, 2), F(3, 5), F(1), F(0)):
            with pytest.raises(ValueError):
                attainability_probe(1, q, 1000)

    def test_ell2_converges(self):
        rep = attainability_probe(2, F(3, 10), 2000)
        assert math.isfinite(float(rep.rhs_partial)) and float(rep.rhs_partial) > 0


class TestAlphaRange:
    def test_endpoints_near_published_values(self):
        lo, hi = alpha_admissible_range(2000, F(1, 10000))
        assert abs(lo - 0.847) < 5e-3
        assert abs(hi - 1.307) < 5e-3

    def test_point_probes(self):
        assert alpha2_feasible(1, 1000)[0]
        ok, n = alpha2_feasible(F(19, 10), 1000)
        assert not ok and n is not None


class TestPerSummandNonnegativity:
    def test_every_summand_nonnegative_when_assumptions_hold(self):
        # windowed single-index remainder evaluations expose each summand
        from hrbweights.verify import _remainder_raw

        for ell in (1, 2, 3):
            g = canonical(ell, 128)
            rep = assumptions_check(g, ell, 60)
            assert rep.a1_ok and rep.a2_ok
            u = random_test_vector(808, ell, 10, 128)
            for k in range(ell):
                for n in range(ell - k, (u.support_end or ell) + 1):
                    term = _remainder_raw(g, u, ell, k, 192, n_lo=n, n_hi=n)
                    assert float(term) >= -2.0 ** -120, (ell, k, n)
