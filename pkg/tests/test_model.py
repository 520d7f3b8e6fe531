import math

import numpy as np
import pytest

from twinchi2.model import (Kind, SystemSpec, MomentTable, variance_x, variance_y,
                            covariance_x, covariance_y, vlf_criteria,
                            criteria_from_values)
from twinchi2.analytic import AnalyticParams, concurrent_moment_table, cascaded_moment_table


def reference_criteria(table):
    """Independent criterion assembler working on raw table arrays."""
    mx, my = table.mean_x, table.mean_y
    cxx = table.second_xx - np.outer(mx, mx)
    cyy = table.second_yy - np.outer(my, my)
    ysum = 3.0 + cyy[0, 0] + cyy[1, 1] + cyy[2, 2] \
        + 2.0 * (cyy[0, 1] + cyy[0, 2] + cyy[1, 2])
    out = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        out.append(2.0 + cxx[i, i] + cxx[j, j] - 2.0 * cxx[i, j] + ysum)
    return tuple(out)


def random_table(rng):
    mx = rng.normal(scale=0.5, size=3)
    my = rng.normal(scale=0.5, size=3)
    sxx = rng.normal(size=(3, 3))
    syy = rng.normal(size=(3, 3))
    sxx = 0.5 * (sxx + sxx.T)
    syy = 0.5 * (syy + syy.T)
    se3 = np.abs(rng.normal(scale=0.01, size=3))
    se33 = np.abs(rng.normal(scale=0.01, size=(3, 3)))
    return MomentTable(n_traj=100, exact=False, mean_x=mx, mean_y=my,
                       second_xx=sxx, second_yy=syy, intensity=np.abs(rng.normal(size=3)),
                       se_mean_x=se3, se_mean_y=se3, se_second_xx=se33,
                       se_second_yy=se33, se_intensity=se3)


class TestVacuum:
    def test_variances_are_unity(self):
        table = MomentTable.vacuum()
        for j in (1, 2, 3):
            assert variance_x(table, j) == 1.0
            assert variance_y(table, j) == 1.0

    def test_covariances_vanish(self):
        table = MomentTable.vacuum()
        assert covariance_x(table, 1, 2) == 0.0
        assert covariance_y(table, 2, 3) == 0.0

    def test_criteria_all_five(self):
        rep = vlf_criteria(MomentTable.vacuum())
        assert rep.values() == (5.0, 5.0, 5.0)
        assert not rep.entangled
        assert rep.violated == frozenset()


class TestFrozenExamples:
    def test_concurrent_variance_mode2(self):
        # V(X_2) = 1 + 2 sinh^2(Omega t) at Omega t = 1
        p = AnalyticParams.concurrent(1.0, 1.0)
        table = concurrent_moment_table(p, 1.0 / p.rate)
        expected = 1.0 + 2.0 * math.sinh(1.0) ** 2  # = 3.762195691083632
        assert variance_x(table, 2) == pytest.approx(expected, abs=1e-12)
        assert variance_x(table, 2) == pytest.approx(3.762195691083632, abs=1e-10)

    def test_concurrent_covariance_equal_couplings(self):
        # cov(X_1, X_2) = sinh(2)/sqrt(2) at Omega t = 1, gamma_1 = gamma_2
        p = AnalyticParams.concurrent(1.0, 1.0)
        table = concurrent_moment_table(p, 1.0 / p.rate)
        assert covariance_x(table, 1, 2) == pytest.approx(
            math.sinh(2.0) / math.sqrt(2.0), abs=1e-12)
        assert covariance_x(table, 1, 2) == pytest.approx(2.5645775888056344, abs=1e-10)

    def test_cascaded_oscillatory_covariance(self):
        p = AnalyticParams.cascaded(1.0, 1.8)
        table = cascaded_moment_table(p, 0.5 / p.rate)
        assert covariance_x(table, 2, 3) == pytest.approx(0.06302239808857, abs=1e-10)

    def test_cascaded_oscillatory_v12(self):
        p = AnalyticParams.cascaded(1.0, 1.8)
        rep = vlf_criteria(cascaded_moment_table(p, 0.5 / p.rate))
        assert rep.v12 == pytest.approx(2.887318960946, abs=1e-10)

    def test_cascaded_table_at_zero(self):
        p = AnalyticParams.cascaded(1.0, 1.8)
        table = cascaded_moment_table(p, 0.0)
        for j in (1, 2, 3):
            assert variance_x(table, j) == pytest.approx(1.0, abs=1e-15)


class TestErrors:
    def test_unknown_mode_index(self):
        table = MomentTable.vacuum()
        with pytest.raises(ValueError):
            variance_x(table, 0)
        with pytest.raises(ValueError):
            variance_y(table, 4)

    def test_equal_indices_need_variance(self):
        with pytest.raises(ValueError):
            covariance_x(MomentTable.vacuum(), 2, 2)

    def test_empty_ensemble_rejected(self):
        with pytest.raises(ValueError):
            MomentTable(n_traj=1, exact=False, mean_x=np.zeros(3), mean_y=np.zeros(3),
                        second_xx=np.zeros((3, 3)), second_yy=np.zeros((3, 3)),
                        intensity=np.zeros(3), se_mean_x=np.zeros(3),
                        se_mean_y=np.zeros(3), se_second_xx=np.zeros((3, 3)),
                        se_second_yy=np.zeros((3, 3)), se_intensity=np.zeros(3))


class TestSystemSpecValidation:
    def test_travelling_wave_rejects_losses(self):
        with pytest.raises(ValueError):
            SystemSpec(Kind.CASCADED_TW, 0.01, 0.01, pump1_init=1.0,
                       pump2_init=1.0, loss_a1=1.0)

    def test_cavity_rejects_pump_init(self):
        with pytest.raises(ValueError):
            SystemSpec(Kind.CASCADED_CAVITY, 0.01, 0.01, pump1_init=1.0,
                       eps1=1.0, eps2=1.0, loss_a1=1, loss_a2=1, loss_a3=1,
                       loss_b1=1, loss_b2=1)

    def test_cavity_requires_positive_losses(self):
        with pytest.raises(ValueError):
            SystemSpec.cascaded_cavity(0.01, 0.01, 1.0, 1.0, loss_a=0.0, loss_b=1.0)

    def test_negative_coupling_rejected(self):
        with pytest.raises(ValueError):
            SystemSpec.cascaded_tw(-0.01, 0.01, 1.0, 1.0)

    def test_zero_coupling_allowed(self):
        spec = SystemSpec.cascaded_tw(0.0, 0.0, 1.0, 1.0)
        assert spec.chi1 == 0.0


class TestVerdict:
    def test_strict_inequality_at_bound(self):
        rep = criteria_from_values(4.0, 4.0, 4.0)
        assert rep.violated == frozenset()
        assert not rep.entangled

    def test_two_violations_entangle(self):
        rep = criteria_from_values(3.9, 4.2, 3.9)
        assert rep.violated == {"12", "23"}
        assert rep.entangled

    def test_monotone_under_decrease(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            vals = rng.uniform(1.0, 7.0, size=3)
            before = criteria_from_values(*vals)
            k = rng.integers(0, 3)
            vals[k] -= rng.uniform(0.0, 3.0)
            after = criteria_from_values(*vals)
            if before.entangled:
                assert after.entangled

    def test_conservative_values(self):
        rep = criteria_from_values(3.0, 3.0, 3.0, se12=0.1, se13=0.2, se23=0.3)
        assert rep.conservative_values() == pytest.approx((3.3, 3.6, 3.9))


class TestAssemblyRegression:
    def test_against_reference_assembler(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            table = random_table(rng)
            rep = vlf_criteria(table)
            ref = reference_criteria(table)
            assert rep.values() == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_linearity_in_centered_moments(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            table = random_table(rng)
            lam = rng.uniform(0.1, 3.0)
            mx, my = table.mean_x, table.mean_y
            scaled = MomentTable(
                n_traj=table.n_traj, exact=False, mean_x=mx, mean_y=my,
                second_xx=lam * (table.second_xx - np.outer(mx, mx)) + np.outer(mx, mx),
                second_yy=lam * (table.second_yy - np.outer(my, my)) + np.outer(my, my),
                intensity=table.intensity,
                se_mean_x=table.se_mean_x, se_mean_y=table.se_mean_y,
                se_second_xx=table.se_second_xx, se_second_yy=table.se_second_yy,
                se_intensity=table.se_intensity)
            base = np.array(vlf_criteria(table).values())
            got = np.array(vlf_criteria(scaled).values())
            assert got == pytest.approx(5.0 + lam * (base - 5.0), rel=1e-10, abs=1e-10)


class TestErrorPropagation:
    def test_quadrature_sum_hand_check(self):
        # only se_second_xx[0,0] nonzero: se12 = se13 = that error, se23 = 0
        se33 = np.zeros((3, 3))
        se33[0, 0] = 0.25
        table = MomentTable(n_traj=10, exact=False, mean_x=np.zeros(3),
                            mean_y=np.zeros(3), second_xx=np.zeros((3, 3)),
                            second_yy=np.zeros((3, 3)), intensity=np.zeros(3),
                            se_mean_x=np.zeros(3), se_mean_y=np.zeros(3),
                            se_second_xx=se33, se_second_yy=np.zeros((3, 3)),
                            se_intensity=np.zeros(3))
        rep = vlf_criteria(table)
        assert rep.se12 == pytest.approx(0.25)
        assert rep.se13 == pytest.approx(0.25)
        assert rep.se23 == 0.0

    def test_mean_contributes_via_delta_method(self):
        # V(X_1) = 1 + s_xx - m^2: se = sqrt(se_s^2 + (2 m se_m)^2)
        table = MomentTable(n_traj=10, exact=False,
                            mean_x=np.array([0.5, 0, 0]), mean_y=np.zeros(3),
                            second_xx=np.zeros((3, 3)), second_yy=np.zeros((3, 3)),
                            intensity=np.zeros(3),
                            se_mean_x=np.array([0.1, 0, 0]), se_mean_y=np.zeros(3),
                            se_second_xx=np.zeros((3, 3)),
                            se_second_yy=np.zeros((3, 3)), se_intensity=np.zeros(3))
        rep = vlf_criteria(table)
        assert rep.se12 == pytest.approx(abs(2 * 0.5 * 0.1))
