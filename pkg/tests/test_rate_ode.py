"""Rate-equation oracle: structure, conservation, and steady-state limits."""

from fractions import Fraction

import numpy as np
import pytest

from multidicke import (
    ResourceCapError,
    SystemSpec,
    ValidationError,
    steady_state_by_integration,
    steady_state_two_channel,
)
from multidicke.rate_ode import DEFAULT_RTOL, RateEquationSystem, integrate


def test_single_emitter_exponential():
    ts = np.linspace(0, 5, 21)
    pops, states = integrate(SystemSpec(1, (1,)), ts)
    i_excited = states.index((0,))
    assert np.max(np.abs(pops[:, i_excited] - np.exp(-ts))) < 1e-10


def test_probability_conserved():
    spec = SystemSpec(10, (1, 2))
    ts = np.linspace(0, 1.0, 50)
    pops, _ = integrate(spec, ts)
    assert np.max(np.abs(pops.sum(axis=1) - 1)) < 10 * DEFAULT_RTOL


def test_generator_is_triangular():
    system = RateEquationSystem.build(SystemSpec(6, (1, 2, 3)))
    assert system.is_triangular()


def test_generator_columns_conserve():
    system = RateEquationSystem.build(SystemSpec(5, (1, 2)))
    colsums = np.asarray(system.generator.sum(axis=0)).ravel()
    assert np.max(np.abs(colsums)) < 1e-12


def test_grid_validation():
    spec = SystemSpec(2, (1,))
    with pytest.raises(ValidationError):
        integrate(spec, [1.0, 0.5])
    with pytest.raises(ValidationError):
        integrate(spec, [-1.0, 1.0])
    with pytest.raises(ResourceCapError):
        integrate(SystemSpec(3000, (1, 2)), [0.0, 1.0])


def test_steady_state_single_channel_all_ground():
    dist = steady_state_by_integration(SystemSpec(6, (2,)))
    assert dist.states == ((6,),)
    assert float(dist.probabilities[0]) == pytest.approx(1.0, abs=1e-12)


def test_steady_state_flat_at_r1():
    dist = steady_state_by_integration(SystemSpec(20, (1, 1)))
    assert np.max(np.abs(dist.as_array() - 1 / 21)) < 1e-8


def test_steady_state_matches_closed_formula():
    spec = SystemSpec(20, (1, Fraction(1, 2)))
    ode = steady_state_by_integration(spec)
    closed = steady_state_two_channel(20, Fraction(1, 2))
    err = max(abs(ode.probability(s) - closed.probability(s)) for s in closed.states)
    assert err < 1e-8
