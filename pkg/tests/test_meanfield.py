"""Large-N operational-time analysis against the exact steady state."""

import math

import numpy as np
import pytest

from multidicke import (
    ValidationError,
    asymptotic_distribution,
    order_parameter_asymptotic,
    solve_stopping_time,
    steady_state_two_channel,
    susceptibility_asymptotic,
    thermal_log_ratio,
    yule_mean,
)


class TestStoppingTime:
    def test_balanced_closed_form(self):
        # equal rates solve exactly: tau* = ln((N+2)/2)/Gamma
        st = solve_stopping_time(100, 2.0, 2.0)
        assert st.tau_star == pytest.approx(math.log(51) / 2.0, rel=1e-14)

    def test_large_n_dominated_by_fast_channel(self):
        st = solve_stopping_time(10**6, 0.3, 0.7)
        assert st.tau_star == pytest.approx(math.log(10**6 + 2) / 0.7, rel=0.01)

    def test_zero_emitters_edge(self):
        assert solve_stopping_time(0, 1.0, 2.0).tau_star == 0.0

    @pytest.mark.parametrize("n,g1,g2", [(10, 1, 1), (1000, 0.2, 0.8), (10**7, 3, 0.1)])
    def test_residual_tiny(self, n, g1, g2):
        assert solve_stopping_time(n, g1, g2).residual < 1e-12

    def test_validation(self):
        with pytest.raises(ValidationError):
            solve_stopping_time(5, 0.0, 1.0)
        with pytest.raises(ValidationError):
            solve_stopping_time(-1, 1.0, 1.0)


class TestYule:
    def test_zero_time(self):
        assert yule_mean(0.0, 3.0) == 0.0

    def test_doubling_point(self):
        assert yule_mean(math.log(2), 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_stopping_condition_splits_total(self):
        # at tau* the two channel means exhaust all N excitations
        n = 50
        st = solve_stopping_time(n, 1.0, 1.0)
        total = yule_mean(st.tau_star, 1.0) + yule_mean(st.tau_star, 1.0)
        assert total == pytest.approx(n, rel=1e-12)


class TestAsymptoticDistribution:
    def test_flat_at_r1(self):
        dist = asymptotic_distribution(40, 1.0)
        assert np.max(np.abs(dist.as_array() - 1 / 41)) < 1e-12

    def test_kolmogorov_distance_fixture(self):
        # first measurement 0.0660 (N=100, r=2); fixture threshold 0.075
        exact = steady_state_two_channel(100, 2)
        asym = asymptotic_distribution(100, 2.0)
        assert asym.kolmogorov_distance(exact) < 0.075

    def test_corner_log_slope_reproduced(self):
        # initial slope on a log scale at the anchored (dominant) corner
        exact = steady_state_two_channel(1000, 4).by_x()
        asym = asymptotic_distribution(1000, 4.0).by_x()
        k = 6
        slope_exact = np.polyfit(np.arange(k), np.log(exact[-k:]), 1)[0]
        slope_asym = np.polyfit(np.arange(k), np.log(asym[-k:]), 1)[0]
        assert abs(slope_asym / slope_exact - 1) < 0.10

    def test_needs_two_emitters(self):
        with pytest.raises(ValidationError):
            asymptotic_distribution(1, 2.0)


class TestCaseFormulas:
    def test_chi_at_balanced_point(self):
        assert susceptibility_asymptotic(math.e**10, 1.0) == pytest.approx(10.0, rel=1e-12)

    def test_heavy_channel_value(self):
        assert order_parameter_asymptotic(10**4, 2.0) == pytest.approx(0.99, rel=1e-12)

    def test_balanced_half(self):
        assert order_parameter_asymptotic(10**6, 1.0) == 0.5

    def test_exchange_symmetry(self):
        for r in (0.3, 0.8, 2.5, 5.0):
            a = order_parameter_asymptotic(10**5, r)
            b = 1.0 - order_parameter_asymptotic(10**5, 1.0 / r)
            assert a == pytest.approx(b, rel=1e-10)

    def test_exact_vs_asymptotic_order_parameter(self):
        from fractions import Fraction

        exact = steady_state_two_channel(500, Fraction(3, 2)).n_bar(1)
        asym = order_parameter_asymptotic(500, 1.5)
        assert abs(exact - asym) < 0.05

    def test_asymptotic_chi_scaling_exponent(self):
        # compare log-log slopes, not absolute values: chi/ln N ~ N^(r-1)
        r = 0.5
        ns = np.array([10**3, 10**4, 10**5, 10**6], dtype=float)
        chis = np.array([susceptibility_asymptotic(n, r) for n in ns])
        slope = np.polyfit(np.log(ns), np.log(chis / np.log(ns)), 1)[0]
        assert slope == pytest.approx(r - 1, abs=1e-12)


def test_thermal_ratio_vanishes_with_n():
    values = [thermal_log_ratio(n, 1.0, 2.0) for n in (10, 100, 1000, 10**4, 10**6)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-3
    assert all(v > 0 for v in values)
