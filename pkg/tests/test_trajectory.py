"""Closed-form cascade solver against the ODE oracle and path enumeration."""

from fractions import Fraction

import numpy as np
import pytest

from multidicke import (
    PrecisionExhausted,
    ResourceCapError,
    SystemSpec,
    ValidationError,
    burst_predicate,
    find_peak,
    intensity,
    solve_balanced,
    solve_by_path_enumeration,
    solve_multichannel,
    solve_single_channel,
)
from multidicke.rate_ode import integrate as ode_integrate

from conftest import dynamics_grid


class TestSingleChannel:
    def test_n1_exponential_decay(self):
        table = solve_single_channel(SystemSpec(1, (1,)))
        ts = np.linspace(0, 4, 9)
        assert np.allclose(table.population((0,)).evaluate_grid(ts), np.exp(-ts), atol=1e-15)
        assert np.allclose(table.population((1,)).evaluate_grid(ts), 1 - np.exp(-ts), atol=1e-15)

    def test_n2_degenerate_pair(self):
        # L_2 = L_1 = 2 Gamma, so p_1 = 2 Gamma t e^{-2 Gamma t}
        gamma = Fraction(3, 2)
        table = solve_single_channel(SystemSpec(2, (gamma,)))
        (term,) = table.population((1,)).terms
        assert term.power == 1 and term.rate == 2 * gamma
        assert float(term.coeff) == pytest.approx(float(2 * gamma), abs=1e-30)
        ts = np.linspace(0, 3, 13)
        ode, states = ode_integrate(SystemSpec(2, (gamma,)), ts)
        closed = table.evaluate_grid(ts)
        assert np.max(np.abs(closed - ode)) < 1e-10

    def test_n10_matches_oracle(self):
        spec = SystemSpec(10, (1,))
        ts = dynamics_grid(spec, 60)
        closed = solve_single_channel(spec).evaluate_grid(ts)
        ode, _ = ode_integrate(spec, ts)
        assert np.max(np.abs(closed - ode)) < 1e-8

    def test_rejects_multichannel(self):
        with pytest.raises(ValidationError):
            solve_single_channel(SystemSpec(3, (1, 2)))


class TestMultichannel:
    def test_n1_two_channels_split(self):
        # single emitter branches (1-e^{-Gt})/2 into each ground level
        table = solve_multichannel(SystemSpec(1, (Fraction(1, 2), Fraction(1, 2))))
        ts = np.linspace(0, 5, 11)
        expected = (1 - np.exp(-ts)) / 2
        assert np.allclose(table.population((1, 0)).evaluate_grid(ts), expected, atol=1e-14)
        assert np.allclose(table.population((0, 1)).evaluate_grid(ts), expected, atol=1e-14)

    def test_dp_equals_path_enumeration(self):
        spec = SystemSpec(3, (1, 2))
        table = solve_multichannel(spec)
        ts = np.linspace(0, 2, 9)
        for state in table.states:
            ref = solve_by_path_enumeration(spec, state)
            diff = table.population(state).evaluate_grid(ts) - ref.evaluate_grid(ts)
            assert np.max(np.abs(diff)) < 1e-10

    def test_balanced_levels_share_weight(self):
        # every state with the same excitation count has the same population
        spec = SystemSpec(6, (Fraction(1, 3),) * 3)
        table = solve_multichannel(spec)
        ts = np.array([0.3, 1.1])
        for q in range(7):
            states = [s for s in table.states if sum(s) == q]
            ref = table.population(states[0]).evaluate_grid(ts)
            for s in states[1:]:
                assert np.allclose(table.population(s).evaluate_grid(ts), ref, atol=1e-12)

    def test_matches_oracle_with_rate_collisions(self):
        # commensurate rates (r = 2) force repeated decay rates in the DP
        spec = SystemSpec(8, (1, 2))
        ts = dynamics_grid(spec, 40)
        closed = solve_multichannel(spec).evaluate_grid(ts)
        ode, _ = ode_integrate(spec, ts)
        assert np.max(np.abs(closed - ode)) < 1e-8

    def test_three_channels_vs_oracle(self):
        spec = SystemSpec(6, (1, 2, 5))
        ts = dynamics_grid(spec, 30)
        closed = solve_multichannel(spec).evaluate_grid(ts)
        ode, _ = ode_integrate(spec, ts)
        assert np.max(np.abs(closed - ode)) < 1e-8

    def test_targeted_solve_matches_full(self):
        spec = SystemSpec(5, (1, 3))
        full = solve_multichannel(spec)
        part = solve_multichannel(spec, target=(2, 1))
        assert not part.complete
        ts = np.linspace(0, 1, 5)
        assert np.allclose(
            part.population((2, 1)).evaluate_grid(ts),
            full.population((2, 1)).evaluate_grid(ts),
            atol=1e-14,
        )

    def test_initial_condition(self):
        table = solve_multichannel(SystemSpec(4, (1, 2)))
        for state in table.states:
            expected = 1.0 if sum(state) == 0 else 0.0
            assert float(table.population(state)(0)) == pytest.approx(expected, abs=1e-12)

    def test_normalization_and_positivity(self):
        spec = SystemSpec(30, (1, 2))
        table = solve_multichannel(spec)
        ts = dynamics_grid(spec, 25)[1:]
        pops = table.evaluate_grid(ts)
        assert np.max(np.abs(pops.sum(axis=1) - 1)) < 1e-9
        assert pops.min() > -1e-9 and pops.max() < 1 + 1e-9

    def test_channel_relabeling_symmetry(self):
        spec = SystemSpec(5, (1, 2, 7))
        perm = (2, 0, 1)
        table = solve_multichannel(spec)
        permuted = solve_multichannel(spec.permuted(perm))
        ts = np.linspace(0, 1.5, 7)
        for state in table.states:
            moved = tuple(state[p] for p in perm)
            assert np.allclose(
                table.population(state).evaluate_grid(ts),
                permuted.population(moved).evaluate_grid(ts),
                atol=1e-12,
            )

    def test_weak_second_channel_approaches_single(self):
        # Gamma_2 = 1e-6 Gamma_1: level marginals match the d=1 cascade to 1e-4
        n = 6
        two = solve_multichannel(SystemSpec(n, (1, Fraction(1, 10**6))))
        one = solve_single_channel(SystemSpec(n, (1,)))
        ts = np.linspace(0, 6, 13)
        for q in range(n + 1):
            marginal = np.zeros(len(ts))
            for state in two.states:
                if sum(state) == q:
                    marginal += two.population(state).evaluate_grid(ts)
            assert np.max(np.abs(marginal - one.population((q,)).evaluate_grid(ts))) < 1e-4

    def test_zero_rate_rejected(self):
        with pytest.raises(ValidationError):
            SystemSpec(3, (1, 0))

    def test_lattice_cap(self):
        with pytest.raises(ResourceCapError):
            solve_multichannel(SystemSpec(300, (1, 2)), lattice_cap=1000)

    def test_enumeration_cap(self):
        with pytest.raises(ResourceCapError):
            solve_by_path_enumeration(SystemSpec(20, (1, 2)), (10, 10), max_paths=100)

    def test_precision_exhaustion_detected(self):
        with pytest.raises(PrecisionExhausted):
            solve_balanced(SystemSpec(80, (Fraction(1, 2), Fraction(1, 2))), precision_bits=96)


class TestBalanced:
    def test_d1_reduction_recovers_single_channel(self):
        spec1 = SystemSpec(7, (Fraction(2, 3),))
        cascade = solve_balanced(spec1)
        single = solve_single_channel(spec1)
        ts = np.linspace(0, 4, 9)
        for m in range(8):
            assert np.allclose(
                cascade.level_population(m).evaluate_grid(ts),
                single.population((7 - m,)).evaluate_grid(ts),
                atol=1e-14,
            )

    def test_full_table_matches_multichannel(self):
        spec = SystemSpec(8, (1, 1, 1, 1))
        bal = solve_balanced(spec)
        full = solve_multichannel(spec)
        ts = np.linspace(0, 1.2, 7)
        for state in full.states:
            diff = full.population(state).evaluate_grid(ts) - bal.state_population(
                state
            ).evaluate_grid(ts)
            assert np.max(np.abs(diff)) < 1e-10

    def test_expand(self):
        spec = SystemSpec(4, (1, 1))
        table = solve_balanced(spec).expand()
        assert table.complete
        ts = np.linspace(0, 2, 5)[1:]
        assert table.normalization_residual(ts) < 1e-12

    def test_requires_equal_rates(self):
        with pytest.raises(ValidationError):
            solve_balanced(SystemSpec(4, (1, 2)))


class TestIntensity:
    def test_n1_single_channel(self):
        table = solve_single_channel(SystemSpec(1, (1,)))
        ts = np.linspace(0, 4, 9)
        assert np.allclose(intensity(table).evaluate_grid(ts), np.exp(-ts), atol=1e-14)

    def test_per_channel_vs_oracle_expectation(self):
        # I_a(t) = G_a <m (n_a + 1)> against the rate-equation populations
        spec = SystemSpec(10, (1, 3))
        table = solve_multichannel(spec)
        ts = dynamics_grid(spec, 30)[1:]
        pops, states = ode_integrate(spec, ts)
        n = spec.n_emitters
        for alpha in range(2):
            g = float(spec.channels[alpha])
            weights = np.array([(n - sum(s)) * (s[alpha] + 1) * g for s in states])
            expected = pops @ weights
            got = intensity(table, alpha).evaluate_grid(ts)
            rel = np.max(np.abs(got - expected) / np.maximum(np.abs(expected), 1e-30))
            assert rel < 1e-6

    def test_total_is_channel_sum(self):
        spec = SystemSpec(6, (1, 2))
        table = solve_multichannel(spec)
        ts = np.linspace(0, 1, 6)
        total = intensity(table).evaluate_grid(ts)
        parts = intensity(table, 0).evaluate_grid(ts) + intensity(table, 1).evaluate_grid(ts)
        assert np.allclose(total, parts, atol=1e-12)

    def test_balanced_formula(self):
        # I_tot = (G/d) sum_m m (N - m + d) p_m
        spec = SystemSpec(9, (Fraction(1, 3),) * 3)
        cascade = solve_balanced(spec)
        ts = np.linspace(0, 2, 7)[1:]
        direct = np.zeros(len(ts))
        for m in range(10):
            direct += (
                float(Fraction(1, 3)) * m * (9 - m + 3)
            ) * cascade.level_population(m).evaluate_grid(ts)
        assert np.allclose(cascade.intensity().evaluate_grid(ts), direct, atol=1e-10)
        assert np.allclose(
            cascade.intensity(0).evaluate_grid(ts), direct / 3, atol=1e-10
        )

    def test_incomplete_table_rejected(self):
        part = solve_multichannel(SystemSpec(4, (1, 2)), target=(1, 1))
        with pytest.raises(ValidationError):
            intensity(part)

    def test_photon_conservation(self):
        for spec in (SystemSpec(5, (1,)), SystemSpec(5, (1, 2)), SystemSpec(4, (1, 2, 5))):
            if spec.d == 1:
                table = solve_single_channel(spec)
            else:
                table = solve_multichannel(spec)
            total = float(intensity(table).integral_to_infinity())
            assert total == pytest.approx(spec.n_emitters, rel=1e-6)


class TestPeak:
    def test_calculus_example(self):
        from multidicke import ExpPolySum

        t_peak, value = find_peak(ExpPolySum([(1, 1, 1)]))
        assert t_peak == pytest.approx(1.0, rel=1e-8)
        assert value == pytest.approx(np.exp(-1), rel=1e-10)

    def test_monotone_signal_peaks_at_zero(self):
        from multidicke import ExpPolySum

        t_peak, value = find_peak(ExpPolySum.exponential(2, coeff=3))
        assert t_peak == 0.0 and value == pytest.approx(3.0)

    def test_n40_peak_scaling(self):
        n = 40
        cascade = solve_balanced(SystemSpec(n, (1,)))
        t_peak, i_peak = find_peak(cascade.intensity())
        assert i_peak == pytest.approx(n**2 / 5, rel=0.10)
        assert t_peak == pytest.approx(np.log(n) / n, rel=0.15)


class TestBurst:
    def test_boundary_two_emitters(self):
        # N - 1 = Gamma_0/Gamma exactly: no burst
        assert burst_predicate(SystemSpec(2, (1,)), 0) is False

    def test_balanced_condition(self):
        assert burst_predicate(SystemSpec(150, (Fraction(1, 8),) * 8), 0) is True
        assert burst_predicate(SystemSpec(9, (1,) * 8), 0) is False  # N-1 = 8 = d

    def test_unbalanced(self):
        spec = SystemSpec(5, (1, 10))
        assert burst_predicate(spec, 0) is False  # 4 > 11 fails
        assert burst_predicate(spec, 1) is True  # 4 > 1.1
        with pytest.raises(ValidationError):
            burst_predicate(spec, 2)
