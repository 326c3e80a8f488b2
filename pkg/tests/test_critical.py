import numpy as np
import pytest

import sbmboot as sb
from sbmboot import FluidModel
from sbmboot.critical import (critical_curve, critical_point,
                              equal_split_ratio, extreme_allocations,
                              identical_chi, region_membership)
from conftest import random_chi


class TestCriticalPoint:
    def test_single_community_reduces_to_unit_threshold(self):
        pt = critical_point(np.array([1.0]), np.array([[1.0]]), 2)
        assert pt.alpha[0] == pytest.approx(1.0, abs=1e-14)
        assert pt.x_theta[0] == pytest.approx(2.0)
        assert pt.z[0] == pytest.approx(2.0)

    def test_identical_equal_direction_closed_form(self):
        worst = 0.0
        for k in range(2, 11):
            for psi in (0.1, 1 / 3, 0.9):
                for r in (2, 3, 4):
                    pt = critical_point(np.ones(k), identical_chi(k, psi), r)
                    target = (1.0 + (k - 1) * psi) ** (-r / (r - 1.0))
                    worst = max(worst, float(np.max(np.abs(pt.alpha
                                                           - target))))
        assert worst < 1e-10

    def test_certificates_hold(self):
        rng = np.random.default_rng(60)
        found = 0
        while found < 25:
            k = int(rng.integers(2, 4))
            r = int(rng.integers(2, 4))
            chi = random_chi(rng, k, hi=0.5)
            theta = np.concatenate([[1.0],
                                    np.exp(rng.uniform(-0.5, 0.5, k - 1))])
            try:
                pt = critical_point(theta, chi, r)
            except (ValueError, np.linalg.LinAlgError):
                continue
            if not pt.in_unit_box or np.any(pt.z <= 0):
                continue
            found += 1
            assert pt.rho_residual < 1e-9
            assert pt.null_residual < 1e-9
            assert abs(pt.lambda_pf) < 1e-6

    def test_rejects_bad_theta(self):
        chi = identical_chi(2, 0.5)
        with pytest.raises(ValueError):
            critical_point(np.array([2.0, 1.0]), chi, 2)  # theta_1 != 1
        with pytest.raises(ValueError):
            critical_point(np.array([1.0, -1.0]), chi, 2)
        with pytest.raises(ValueError):
            # strongly tilted direction leaves the admissible cone
            critical_point(np.array([1.0, 1e4]), identical_chi(2, 0.9), 2)

    def test_rejects_singular_chi(self):
        chi = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(np.linalg.LinAlgError):
            critical_point(np.array([1.0, 1.0]), chi, 2)


class TestCriticalCurve:
    def test_pair_curve_monotone_decreasing(self):
        pts = critical_curve(identical_chi(2, 1 / 3), 2)
        assert len(pts) > 20
        a = np.array([p.alpha for p in pts])
        assert np.all(np.diff(a[:, 0]) > 0)
        assert np.all(np.diff(a[:, 1]) < 0)
        assert np.all((a >= 0) & (a <= 1))

    def test_symmetric_point_on_curve(self):
        psi, r = 1 / 3, 2
        grid = [np.array([1.0, t])
                for t in np.append(np.logspace(-0.3, 0.3, 20), 1.0)]
        pts = critical_curve(identical_chi(2, psi), r, grid)
        target = (1 + psi) ** (-r / (r - 1.0))
        gap = min(float(np.max(np.abs(p.alpha - target))) for p in pts)
        assert gap < 1e-9  # theta = (1, 1) lies on the curve

    def test_small_psi_curve_approaches_unit_square(self):
        pts = critical_curve(identical_chi(2, 0.05), 2)
        a = np.array([p.alpha for p in pts])
        # the sweep's extreme points sit close to the axes at height near 1
        assert a[:, 0].max() > 0.9
        assert a[:, 1].max() > 0.9

    def test_large_r_approaches_linear_boundary(self):
        # the subcritical region tends to the set where both weighted sums
        # alpha_i + psi alpha_j stay below 1, so on the critical curve the
        # binding sum approaches 1
        psi = 1 / 3
        pts = critical_curve(identical_chi(2, psi), 12)
        assert len(pts) > 10
        for p in pts:
            binding = max(p.alpha[0] + psi * p.alpha[1],
                          p.alpha[1] + psi * p.alpha[0])
            assert binding == pytest.approx(1.0, abs=0.08)

    def test_every_curve_point_classifies_near_critical(self):
        pts = critical_curve(identical_chi(2, 1 / 3), 2,
                             [np.array([1.0, t])
                              for t in np.logspace(-0.4, 0.4, 7)])
        for p in pts:
            res = sb.classify(FluidModel(2, 2, p.alpha, identical_chi(2, 1 / 3)))
            assert res.verdict == "NearCritical"


class TestRegionMembership:
    def test_zero_alpha_is_sub(self):
        assert region_membership(np.zeros(2), identical_chi(2, 0.5), 2) \
            == "Sub"

    def test_identical_pair_threshold_comparison(self):
        chi = identical_chi(2, 1 / 3)
        assert region_membership([0.9, 0.9], chi, 2) == "Sup"
        assert region_membership([0.3, 0.3], chi, 2) == "Sub"
        assert region_membership([0.5625, 0.5625], chi, 2) \
            == "NearCritical"

    @pytest.mark.slow
    def test_agreement_with_classifier_on_grid(self):
        chi = identical_chi(2, 1 / 3)
        grid = np.linspace(0.02, 1.0, 21)
        band = 0.02  # skip cells whose ray crossing sits this close to 1
        checked = 0
        for a1 in grid:
            for a2 in grid:
                alpha = np.array([a1, a2])
                direct = sb.classify(FluidModel(2, 2, alpha, chi)).verdict
                ray = region_membership(alpha, chi, 2, tol=band)
                if ray == "NearCritical" or direct == "NearCritical":
                    continue
                checked += 1
                assert ray == direct, (alpha, ray, direct)
        assert checked > 350

    def test_sub_region_convex_for_identical_pair(self):
        chi = identical_chi(2, 1 / 3)
        rng = np.random.default_rng(61)
        subs = []
        while len(subs) < 20:
            alpha = rng.uniform(0.0, 0.8, 2)
            if sb.classify(FluidModel(2, 2, alpha, chi)).verdict == "Sub":
                subs.append(alpha)
        rng.shuffle(subs)
        for a, b in zip(subs[:10], subs[10:]):
            mid = 0.5 * (np.asarray(a) + np.asarray(b))
            assert sb.classify(FluidModel(2, 2, mid, chi)).verdict == "Sub"


class TestExtremeAllocations:
    def test_equal_split_closed_form_values(self):
        assert equal_split_ratio(2, 0.1, 2) == pytest.approx(
            (2 / 1.1) ** 2, rel=1e-14)
        # merging limit: one extra community changes nothing at psi -> 1
        assert equal_split_ratio(5, 1.0 - 1e-12, 3) == pytest.approx(
            1.0, rel=1e-9)

    def test_equal_split_large_k_limit(self):
        # for psi < 1 the ratio tends to psi^(-r/(r-1)) as k grows
        val = equal_split_ratio(10_000, 0.1, 2)
        assert val == pytest.approx(100.0, rel=0.02)

    def test_all_in_one_below_equal_split_small_k(self):
        for k in (2, 3, 5, 8, 10):
            equal, allinone = extreme_allocations(k, 0.1, 2, rel_tol=1e-4)
            assert allinone <= equal
        equal, allinone = extreme_allocations(2, 0.1, 4, rel_tol=1e-4)
        assert allinone <= equal

    def test_all_in_one_recovers_single_community_threshold(self):
        # k = 2 with tiny coupling: the loaded community must reach its own
        # critical intensity, which is 1 in normalized units
        equal, allinone = extreme_allocations(2, 0.01, 2, rel_tol=1e-5)
        alpha_star = allinone / 2.0
        assert alpha_star == pytest.approx(1.0, abs=0.01)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            extreme_allocations(1, 0.1, 2)
        with pytest.raises(ValueError):
            extreme_allocations(3, 1.2, 2)
