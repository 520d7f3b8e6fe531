import math

import numpy as np
import pytest

from twinchi2.model import Kind, SystemSpec, vlf_criteria, variance_x
from twinchi2.analytic import (AnalyticParams, Regime, cascaded_intensities,
                               cascaded_moment_table, concurrent_intensities,
                               concurrent_moment_table, concurrent_vlf_closed_form,
                               moment_ode_oracle)

OMT_MIN = math.acosh(math.sqrt(2.0))


def tables_close(a, b, tol):
    scale = max(1.0, np.max(np.abs(a.second_xx)), np.max(np.abs(b.second_xx)))
    assert np.max(np.abs(a.second_xx - b.second_xx)) <= tol * scale
    assert np.max(np.abs(a.second_yy - b.second_yy)) <= tol * scale
    assert np.max(np.abs(a.intensity - b.intensity)) <= tol * scale


class TestParams:
    def test_regimes(self):
        assert AnalyticParams.cascaded(1.0, 1.8).regime == Regime.OSCILLATORY
        assert AnalyticParams.cascaded(1.2, 1.0).regime == Regime.HYPERBOLIC
        assert AnalyticParams.concurrent(1.0, 2.0).regime == Regime.CONCURRENT

    def test_rates(self):
        assert AnalyticParams.cascaded(1.0, 1.8).rate == pytest.approx(math.sqrt(2.24))
        assert AnalyticParams.concurrent(1.0, 1.0).rate == pytest.approx(math.sqrt(2.0))

    def test_equal_cascaded_couplings_have_no_regime(self):
        p = AnalyticParams.cascaded(1.0, 1.0)
        with pytest.raises(ValueError, match="no closed-form"):
            _ = p.regime
        with pytest.raises(ValueError):
            cascaded_intensities(p, 1.0)

    def test_field_validation(self):
        with pytest.raises(ValueError):
            AnalyticParams.cascaded(0.0, 1.0)
        with pytest.raises(ValueError):
            AnalyticParams(Kind.CASCADED_TW, kappa1=1.0, kappa2=2.0, gamma1=1.0)
        with pytest.raises(ValueError):
            AnalyticParams(Kind.CASCADED_CAVITY, kappa1=1.0, kappa2=2.0)

    def test_from_system_spec(self):
        spec = SystemSpec.concurrent_tw(1e-2, 1e-2, 1e3, 1e3)
        p = AnalyticParams.from_system_spec(spec)
        assert p.gamma1 == pytest.approx(10.0)
        assert p.gamma2 == pytest.approx(10.0)


class TestCascadedIntensities:
    def test_vacuum_start(self):
        p = AnalyticParams.cascaded(1.0, 1.8)
        assert cascaded_intensities(p, 0.0) == (0.0, 0.0, 0.0)

    def test_oscillatory_at_pi(self):
        # at Omega t = pi mode 2 empties and modes 1, 3 hold 4 k1^2 k2^2 / Omega^4
        p = AnalyticParams.cascaded(1.0, 1.8)
        n1, n2, n3 = cascaded_intensities(p, math.pi / p.rate)
        assert n2 == pytest.approx(0.0, abs=1e-25)
        assert n3 == pytest.approx(4.0 * 1.8 ** 2 / 2.24 ** 2, rel=1e-12)
        assert n3 == pytest.approx(2.582908163265, abs=1e-9)
        assert n1 == pytest.approx(n3, rel=1e-12)

    def test_hyperbolic_frozen(self):
        p = AnalyticParams.cascaded(1.2, 1.0)
        n1, n2, n3 = cascaded_intensities(p, 1.0 / p.rate)
        assert n2 == pytest.approx((1.44 / 0.44) * math.sinh(1.0) ** 2, rel=1e-12)
        assert n2 == pytest.approx(4.519956585410, abs=1e-9)

    def test_sum_rule(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            k1, k2 = rng.uniform(0.3, 2.0, size=2)
            if k1 == k2:
                continue
            p = AnalyticParams.cascaded(k1, k2)
            n1, n2, n3 = cascaded_intensities(p, rng.uniform(0.0, 2.0))
            assert n1 == pytest.approx(n2 + n3, rel=1e-12, abs=1e-15)


class TestCascadedTables:
    def test_oscillatory_frozen_entries(self):
        p = AnalyticParams.cascaded(1.0, 1.8)
        t = 0.5 / p.rate
        tab = cascaded_moment_table(p, t)
        assert variance_x(tab, 1) == pytest.approx(1.224575953398, abs=1e-10)
        assert variance_x(tab, 2) == pytest.approx(1.205222184880, abs=1e-10)
        assert variance_x(tab, 3) == pytest.approx(1.019353768518, abs=1e-10)
        assert tab.second_xx[0, 1] == pytest.approx(0.675671767642, abs=1e-10)
        assert tab.second_xx[0, 2] == pytest.approx(0.207494404868, abs=1e-10)

    def test_sign_relations(self):
        for k1, k2 in ((1.0, 1.8), (1.2, 1.0)):
            p = AnalyticParams.cascaded(k1, k2)
            tab = cascaded_moment_table(p, 0.7 / p.rate)
            assert tab.second_yy[0, 1] == pytest.approx(-tab.second_xx[0, 1], rel=1e-12)
            assert tab.second_yy[0, 2] == pytest.approx(-tab.second_xx[0, 2], rel=1e-12)
            assert tab.second_yy[1, 2] == pytest.approx(+tab.second_xx[1, 2], rel=1e-12)

    def test_hyperbolic_small_time_expansion(self):
        # V(X_2) = 1 + 2 k1^2 t^2 + O(t^4)
        p = AnalyticParams.cascaded(1.2, 1.0)
        t = 1e-4
        tab = cascaded_moment_table(p, t)
        assert variance_x(tab, 2) == pytest.approx(1.0 + 2.0 * 1.44 * t * t, rel=1e-7)

    def test_oscillatory_periodicity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            k1 = rng.uniform(0.3, 1.0)
            k2 = k1 * rng.uniform(1.2, 2.5)
            p = AnalyticParams.cascaded(k1, k2)
            t = rng.uniform(0.0, 3.0)
            period = 2.0 * math.pi / p.rate
            tables_close(cascaded_moment_table(p, t),
                         cascaded_moment_table(p, t + period), 1e-9)


class TestConcurrentTables:
    def test_vacuum_start(self):
        p = AnalyticParams.concurrent(1.3, 0.7)
        tab = concurrent_moment_table(p, 0.0)
        assert np.all(tab.second_xx == 0.0)
        assert np.all(tab.intensity == 0.0)

    def test_intensities_equal_couplings(self):
        p = AnalyticParams.concurrent(1.0, 1.0)
        n1, n2, n3 = concurrent_intensities(p, 1.0 / p.rate)
        assert n2 == pytest.approx(math.sinh(1.0) ** 2, rel=1e-12)
        assert n1 == pytest.approx(0.5 * math.sinh(1.0) ** 2, rel=1e-12)
        assert n3 == pytest.approx(n1, rel=1e-14)

    def test_sign_relations(self):
        p = AnalyticParams.concurrent(0.8, 1.1)
        tab = concurrent_moment_table(p, 0.6)
        assert tab.second_yy[0, 1] == pytest.approx(-tab.second_xx[0, 1], rel=1e-12)
        assert tab.second_yy[0, 2] == pytest.approx(+tab.second_xx[0, 2], rel=1e-12)
        assert tab.second_yy[1, 2] == pytest.approx(-tab.second_xx[1, 2], rel=1e-12)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            g1, g2 = rng.uniform(0.3, 2.0, size=2)
            t = rng.uniform(0.0, 1.5)
            a = concurrent_moment_table(AnalyticParams.concurrent(g1, g2), t)
            b = concurrent_moment_table(AnalyticParams.concurrent(g2, g1), t)
            perm = [2, 1, 0]
            assert a.second_xx[np.ix_(perm, perm)] == pytest.approx(
                np.asarray(b.second_xx), rel=1e-12, abs=1e-12)
            assert a.intensity[perm] == pytest.approx(np.asarray(b.intensity),
                                                      rel=1e-12, abs=1e-12)

    def test_variance_intensity_link(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            p = AnalyticParams.concurrent(*rng.uniform(0.3, 2.0, size=2))
            t = rng.uniform(0.0, 1.5)
            tab = concurrent_moment_table(p, t)
            for j in (1, 2, 3):
                assert variance_x(tab, j) == pytest.approx(
                    1.0 + 2.0 * tab.intensity[j - 1], rel=1e-12, abs=1e-12)


class TestConcurrentClosedForm:
    def test_vacuum(self):
        rep = concurrent_vlf_closed_form(1.0, 0.0)
        assert rep.values() == (5.0, 5.0, 5.0)

    def test_minimum_value_two(self):
        om = math.sqrt(2.0)
        rep = concurrent_vlf_closed_form(1.0, OMT_MIN / om)
        assert rep.v12 == pytest.approx(2.0, abs=1e-12)
        assert rep.v23 == pytest.approx(2.0, abs=1e-12)
        assert rep.v13 == pytest.approx(3.0, abs=1e-12)
        assert rep.entangled

    def test_minimum_is_bracketed(self):
        om = math.sqrt(2.0)
        tmin = OMT_MIN / om
        vmin = concurrent_vlf_closed_form(1.0, tmin).v12
        for dt in (1e-3, 1e-2):
            assert concurrent_vlf_closed_form(1.0, tmin - dt).v12 > vmin
            assert concurrent_vlf_closed_form(1.0, tmin + dt).v12 > vmin

    def test_grows_without_bound(self):
        om = math.sqrt(2.0)
        rep = concurrent_vlf_closed_form(1.0, 3.0 / om)
        assert rep.v12 > 4.0
        assert rep.v13 > 4.0

    def test_matches_moment_table_route(self):
        for gamma in (0.5, 1.0, 1.7):
            p = AnalyticParams.concurrent(gamma, gamma)
            for omt in np.linspace(0.0, 2.5, 11):
                t = omt / p.rate
                cf = concurrent_vlf_closed_form(gamma, t)
                rep = vlf_criteria(concurrent_moment_table(p, t))
                assert cf.v12 == pytest.approx(rep.v12, abs=1e-12)
                assert cf.v13 == pytest.approx(rep.v13, abs=1e-12)
                assert cf.v23 == pytest.approx(rep.v23, abs=1e-12)


class TestOracle:
    def test_vacuum_at_zero(self):
        tab = moment_ode_oracle(AnalyticParams.cascaded(1.0, 1.8), 0.0)
        assert np.max(np.abs(tab.second_xx)) < 1e-12
        assert np.max(np.abs(tab.intensity)) < 1e-12

    def test_matches_closed_forms_sample(self):
        rng = np.random.default_rng(8)
        cases = []
        for _ in range(5):
            k1 = rng.uniform(0.3, 1.2)
            cases.append(AnalyticParams.cascaded(k1, k1 * rng.uniform(1.2, 2.0)))
            cases.append(AnalyticParams.cascaded(k1 * rng.uniform(1.2, 2.0), k1))
            cases.append(AnalyticParams.concurrent(*rng.uniform(0.4, 1.5, size=2)))
        for p in cases:
            times = rng.uniform(0.05, 2.0, size=3) / p.rate
            oracle_tabs = moment_ode_oracle(p, times)
            for t, otab in zip(times, oracle_tabs):
                ctab = (cascaded_moment_table(p, t) if p.scheme == Kind.CASCADED_TW
                        else concurrent_moment_table(p, t))
                tables_close(ctab, otab, 1e-8)

    def test_equal_couplings_polynomial_solution(self):
        # hand-derived degenerate cascade: n2 = (k t)^2, n3 = (k t)^4 / 4
        p = AnalyticParams.cascaded(1.0, 1.0)
        for t in (0.5, 1.0, 1.7):
            tab = moment_ode_oracle(p, t)
            assert tab.intensity[1] == pytest.approx(t ** 2, rel=1e-8)
            assert tab.intensity[2] == pytest.approx(t ** 4 / 4.0, rel=1e-8)
            assert tab.intensity[0] == pytest.approx(t ** 2 + t ** 4 / 4.0, rel=1e-8)
            assert tab.second_xx[1, 1] == pytest.approx(2.0 * t ** 2, rel=1e-8)

    def test_scalar_and_array_forms(self):
        p = AnalyticParams.concurrent(1.0, 1.0)
        single = moment_ode_oracle(p, 0.5)
        many = moment_ode_oracle(p, [0.25, 0.5])
        assert np.allclose(single.second_xx, many[1].second_xx, atol=1e-10)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            moment_ode_oracle(AnalyticParams.concurrent(1.0, 1.0), -0.1)
