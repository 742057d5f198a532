"""Full cavity Lindblad model against the effective collective cascade."""

import numpy as np
import pytest

from multidicke import (
    CavityModel,
    CutoffError,
    ResourceCapError,
    ValidationError,
    convergence_sweep,
    dicke_reference,
    effective_rates,
    simulate_full,
)


class TestEffectiveRates:
    def test_resonant(self):
        er = effective_rates(CavityModel(5, 1.0, 10.0))
        assert er.gamma_eff == pytest.approx(0.4)
        assert er.lamb_shift == 0.0

    def test_detuned_substitution(self):
        er = effective_rates(CavityModel(5, 1.0, 10.0, detuning=5.0))
        assert er.gamma_eff == pytest.approx(4 * 10 / 200)
        assert er.lamb_shift == pytest.approx(4 * 5 / 200)

    def test_far_detuned_limit(self):
        er = effective_rates(CavityModel(5, 1.0, 10.0, detuning=1e9))
        assert er.gamma_eff == pytest.approx(0.0, abs=1e-15)
        assert er.lamb_shift == pytest.approx(0.0, abs=1e-8)

    def test_bad_cavity_flag(self):
        assert CavityModel(3, 1.0, 50.0).in_bad_cavity_regime
        assert not CavityModel(3, 1.0, 2.0).in_bad_cavity_regime


class TestFullSimulation:
    def test_decoupled_atoms_frozen(self):
        # g = 0: nothing moves, <S^dag S> stays at its initial value N
        model = CavityModel(4, 0.0, 1.0, fock_cutoff=2)
        res = simulate_full(model, np.linspace(0, 5, 21))
        assert np.max(np.abs(res.sdag_s - 4.0)) < 1e-8
        assert np.max(res.photon_number) < 1e-10

    def test_trace_and_hermiticity(self):
        model = CavityModel(3, 1.0, 5.0, fock_cutoff=5)
        res = simulate_full(model, np.linspace(0, 4, 41))
        assert res.trace_error < 1e-8
        assert res.hermiticity_error < 1e-8

    def test_strong_coupling_oscillates_away_from_cascade(self):
        # kappa ~ g: vacuum Rabi-like exchange, far from pure decay
        model = CavityModel(3, 1.0, 1.0, fock_cutoff=6)
        gamma = effective_rates(model).gamma_eff
        ts = np.linspace(0, 5 / gamma, 200)
        res = simulate_full(model, ts)
        ref = dicke_reference(model, ts)
        assert np.max(np.abs(res.sdag_s - ref)) > 0.2 * 3

    def test_bad_cavity_matches_cascade(self):
        model = CavityModel(3, 1.0, 100.0, fock_cutoff=6)
        gamma = effective_rates(model).gamma_eff
        ts = np.linspace(0, 5 / gamma, 200)
        res = simulate_full(model, ts)
        ref = dicke_reference(model, ts)
        assert np.max(np.abs(res.sdag_s - ref)) / 3 < 0.05

    def test_cutoff_error_raised(self):
        # cutoff below the excitation count at strong coupling overflows
        model = CavityModel(5, 1.0, 1.0, fock_cutoff=2)
        with pytest.raises(CutoffError):
            simulate_full(model, np.linspace(0, 3, 31))

    def test_dimension_cap(self):
        model = CavityModel(200, 1.0, 10.0, fock_cutoff=200)
        with pytest.raises(ResourceCapError):
            simulate_full(model, np.linspace(0, 1, 5))

    def test_validation(self):
        with pytest.raises(ValidationError):
            CavityModel(0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            CavityModel(2, -1.0, 1.0)
        with pytest.raises(ValidationError):
            CavityModel(2, 1.0, 0.0)
        with pytest.raises(ValidationError):
            CavityModel(2, 1.0, 1.0, fock_cutoff=0)


class TestConvergence:
    def test_sweep_monotone_and_ratio(self):
        rows = convergence_sweep(
            n_emitters=3, fock_cutoff=6, kappa_over_g=(3.0, 10.0, 100.0), points=200
        )
        devs = [r["max_deviation"] for r in rows]
        assert devs[0] > devs[1] > devs[2]
        # measured once: k/g=100 beats k/g=10 by ~50x; fixture floor 3x
        assert devs[1] / devs[2] >= 3.0
        assert rows[-1]["rel_deviation"] <= 0.05
        assert all(r["trace_error"] < 1e-8 for r in rows)
