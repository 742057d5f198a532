import numpy as np
import pytest

from multidicke import SystemSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def dynamics_grid(spec: SystemSpec, points: int = 50) -> np.ndarray:
    """Grid covering burst and tail: [0, 5/(N*Gamma_min)]."""
    gamma_min = min(float(g) for g in spec.channels)
    return np.linspace(0.0, 5.0 / (spec.n_emitters * gamma_min), points)
