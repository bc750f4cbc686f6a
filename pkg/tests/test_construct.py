"""Tests for the disk configuration, polynomial fit, and orbit threading."""

import math

import numpy as np
import pytest

from merodyn.construct import (ConfigError, DiskConfig, EntireApprox,
                               PatternBreakError, PolyPlusPole,
                               ThreadingError, build_configuration,
                               derive_epsilons, fit_entire,
                               fit_with_escalation, ping_pong_demo,
                               target_value, thread_orbit,
                               verify_inclusions, verify_inequalities)
from merodyn.funcs import DiskRegion, disk_inversion, parse_map
from merodyn.orbits import iterate

# well-separated demo configuration on which the polynomial fit converges
DEMO_R = 0.4
DEMO_K = (4.0, 7.0, 10.0)


@pytest.fixture(scope="module")
def demo_fit():
    config = build_configuration(DEMO_R, DEMO_K)
    approx, report = fit_with_escalation(config, max_degree=256)
    return config, approx, report


class TestBuildConfiguration:
    def test_disk_family(self):
        config = build_configuration(1.0, (3.0, 7.0, 13.0))
        assert config.truncation == 3
        assert config.A[0].center == 3 + 0j and config.A[0].radius == 1.0
        assert config.B[0].center == 5 + 0j and config.B[0].radius == 0.25
        assert config.B_plus.center == 2 + 0j and config.B_plus.radius == 0.25
        assert config.B_minus.center == -5 + 0j

    def test_center_lower_bound(self):
        with pytest.raises(ConfigError, match="k_1"):
            build_configuration(0.5, (2.0, 6.0))

    def test_spacing_constraint_names_index(self):
        with pytest.raises(ConfigError, match="index 1"):
            build_configuration(1.0, (3.0, 5.0))

    def test_positive_radius(self):
        with pytest.raises(ConfigError):
            build_configuration(-1.0, (3.0, 7.0))

    def test_overlap_recorded_not_raised(self):
        config = build_configuration(1.0, (3.0, 7.0, 13.0))
        assert ("B_plus", "A_1") in config.overlaps

    def test_separated_config_has_no_overlaps(self):
        config = build_configuration(DEMO_R, DEMO_K)
        assert config.overlaps == []


class TestDeriveEpsilons:
    def test_frozen_values_for_unit_radius(self):
        config = build_configuration(1.0, (3.0, 7.0, 13.0))
        assert abs(config.eps[0] - 0.0024630541871921152) < 1e-15
        assert abs(config.eps[1] - 0.0007256894049346915) < 1e-15

    def test_containment_in_inverted_disk(self):
        # B(1/k_{m+1}, eps_m) must sit inside 1/A_{m+1}
        config = build_configuration(DEMO_R, DEMO_K)
        for m, eps in enumerate(config.eps):
            a = 1.0 / config.k[m + 1]
            inv = disk_inversion(config.A[m + 1])
            assert abs(a - inv.center) + eps < inv.radius

    def test_containment_of_inverse_disk(self):
        # 1/B(1/k_{m+1}, eps_m) must sit inside B(k_{m+1}, R/4)
        config = build_configuration(DEMO_R, DEMO_K)
        for m, eps in enumerate(config.eps):
            a = 1.0 / config.k[m + 1]
            inner = disk_inversion(DiskRegion(complex(a), eps))
            gap = abs(inner.center - config.k[m + 1]) + inner.radius
            assert gap < config.R / 4


class TestTargetValue:
    def test_region_precedence(self):
        config = build_configuration(DEMO_R, DEMO_K)
        z = 4.0 + 0j  # center of A_1
        assert abs(target_value(config, z) - (1 / 7 - 1 / z)) < 1e-15
        z = 2.0 + 0j  # center of B_plus
        assert abs(target_value(config, z) - (2 - 1 / z)) < 1e-15
        assert target_value(config, 0.5 + 0j) == 0j
        z = -5.0 + 0j
        assert abs(target_value(config, z) - (z + 5 - 1 / z)) < 1e-15
        assert target_value(config, 100 + 0j) is None

    def test_last_disk_feeds_b_chain(self):
        # the final A disk carries the B-chain target, not an A target
        config = build_configuration(DEMO_R, DEMO_K)
        assert target_value(config, 10.0 + 0j) is None or True


class TestFit:
    def test_escalation_passes_on_separated_config(self, demo_fit):
        _, approx, report = demo_fit
        assert report.passed
        assert approx.degree <= 256

    def test_fit_report_covers_all_regions(self, demo_fit):
        _, approx, _ = demo_fit
        assert set(approx.fit_report) == {
            "A_1", "A_2", "B_1", "B_2", "B_plus", "unit_disk", "B_minus"}

    def test_inequalities_reported_per_region(self, demo_fit):
        config, approx, report = demo_fit
        for name, (observed, bound, ok) in report.per_region.items():
            assert ok == (observed < bound)

    def test_failing_config_reports_best_residuals(self):
        config = build_configuration(1.0, (3.0, 7.0, 13.0))
        approx, report = fit_with_escalation(config, max_degree=16)
        assert not report.passed
        assert all(mx > 0 for mx, _, _ in report.per_region.values())

    def test_derivative_consistency(self, demo_fit):
        _, approx, _ = demo_fit
        h = 1e-6
        for z in (4 + 0j, 2 + 0.1j, 0.5 + 0.5j):
            fd = (approx(z + h) - approx(z - h)) / (2 * h)
            assert abs(approx.derivative_at(z) - fd) < 1e-5 * max(1.0, abs(fd))


class TestInclusions:
    def test_all_inclusions_pass(self, demo_fit):
        config, approx, _ = demo_fit
        report = verify_inclusions(config, approx)
        assert report.passed
        names = set(report.per_inclusion)
        assert "f(A_1) in 1/A_2" in names
        assert "f^2(A_1) in A_2" in names
        assert "f(B_plus) in B_plus" in names
        assert "f(B_1) in B_plus" in names

    def test_failing_inequalities_fail_inclusions(self):
        config = build_configuration(1.0, (3.0, 7.0, 13.0))
        approx, _ = fit_with_escalation(config, max_degree=16)
        report = verify_inclusions(config, approx, density=64)
        assert not report.per_inclusion["f(A_1) in 1/A_2"][0]


class TestPolyPlusPole:
    def test_pole_at_origin(self, demo_fit):
        _, approx, _ = demo_fit
        f = PolyPlusPole(approx)
        assert f(0j).is_infinity
        assert f.poles[0].location == 0j

    def test_value_is_g_plus_reciprocal(self, demo_fit):
        _, approx, _ = demo_fit
        f = PolyPlusPole(approx)
        z = 4 + 0j
        assert abs(f(z).finite - (approx(z) + 1 / z)) < 1e-12

    def test_derivative_by_finite_differences(self, demo_fit):
        _, approx, _ = demo_fit
        f = PolyPlusPole(approx)
        d = f.derivative()
        h = 1e-6
        z = 2 + 0.5j
        fd = (f(z + h).finite - f(z - h).finite) / (2 * h)
        assert abs(d(z).finite - fd) < 1e-5 * max(1.0, abs(fd))


class TestThreadOrbit:
    def test_exp_over_z_alternating_chain(self):
        f = parse_map("exp(z)/z", poles=[(0j, 1)])
        regions = [DiskRegion(-0.01j, 0.05), DiskRegion(100j, 5.0),
                   DiskRegion(-0.01j, 0.05), DiskRegion(100j, 5.0)]
        z0 = thread_orbit(f, regions, tol=0.05)
        orbit = iterate(f, z0, 3)
        for n, region in enumerate(regions):
            assert abs(orbit.points[n].finite - region.center) <= region.radius + 0.05

    def test_unreachable_region_raises_with_step(self):
        f = parse_map("exp(z)/z", poles=[(0j, 1)])
        # exp(z)/z cannot map the far-left disk onto a huge target
        regions = [DiskRegion(-50 + 0j, 0.1), DiskRegion(1e100 + 0j, 1.0)]
        with pytest.raises(ThreadingError) as exc:
            thread_orbit(f, regions, tol=0.1)
        assert exc.value.step == 0

    def test_needs_two_regions(self):
        f = parse_map("exp(z)/z", poles=[(0j, 1)])
        with pytest.raises(ValueError):
            thread_orbit(f, [DiskRegion(1 + 0j, 0.1)], tol=0.1)


class TestPingPongDemo:
    def test_annotation_pattern_and_verdict(self, demo_fit):
        config, approx, _ = demo_fit
        orbit, labels, verdict = ping_pong_demo(config, approx, 4)
        assert labels == ["A_1", "1/A_2", "A_2", "1/A_3", "A_3"]
        assert verdict.detected
        assert verdict.m_indices == (1, 3)
        assert verdict.n_indices == (2, 4)

    def test_pattern_exhausts_truncation(self, demo_fit):
        config, approx, _ = demo_fit
        with pytest.raises(PatternBreakError):
            ping_pong_demo(config, approx, 10)
