"""Independent rate-equation integrator used as the correctness oracle.

The populations obey a closed system of linear rate equations on the
occupation lattice: each state loses probability at its total decay rate
and gains from its d predecessors,
``dp_n/dt = -L(n) p_n + sum_a G_a (m+1) n_a p_{n - e_a}``,
starting from the fully excited state.  The generator is strictly
triangular in the level ordering (probability only flows toward the
ground simplex), so an explicit adaptive Runge-Kutta scheme with tight
tolerances integrates it reliably.  Nothing here shares code with the
closed-form solver; agreement between the two is the core correctness
check of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .errors import HorizonError, IntegratorError, ResourceCapError, ValidationError
from .system import SystemSpec, lattice_size, lattice_states

__all__ = ["RateEquationSystem", "integrate", "steady_state_by_integration"]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-14

#: refuse to build generators above this many lattice states
DEFAULT_STATE_CAP = 100_000


@dataclass(frozen=True)
class RateEquationSystem:
    """Sparse generator of the rate equations plus the state bookkeeping."""

    spec: SystemSpec
    states: tuple[tuple[int, ...], ...]
    index: dict
    generator: sparse.csr_matrix

    @classmethod
    def build(cls, spec: SystemSpec, state_cap: int = DEFAULT_STATE_CAP) -> "RateEquationSystem":
        n, d = spec.n_emitters, spec.d
        if lattice_size(n, d) > state_cap:
            raise ResourceCapError(
                f"lattice has {lattice_size(n, d)} states, above the ODE cap {state_cap}"
            )
        states = tuple(lattice_states(spec))
        index = {s: i for i, s in enumerate(states)}
        gammas = spec.channels_float()
        rows, cols, vals = [], [], []
        for i, state in enumerate(states):
            m = n - sum(state)
            loss = m * sum(g * (x + 1) for g, x in zip(gammas, state))
            if loss:
                rows.append(i)
                cols.append(i)
                vals.append(-loss)
            if m == n:
                continue
            for alpha in range(d):
                if state[alpha] == 0:
                    continue
                pred = state[:alpha] + (state[alpha] - 1,) + state[alpha + 1 :]
                rows.append(i)
                cols.append(index[pred])
                vals.append(gammas[alpha] * (m + 1) * state[alpha])
        gen = sparse.csr_matrix(
            (vals, (rows, cols)), shape=(len(states), len(states))
        )
        return cls(spec, states, index, gen)

    def initial_state(self) -> np.ndarray:
        y0 = np.zeros(len(self.states))
        y0[self.index[(0,) * self.spec.d]] = 1.0
        return y0

    def is_triangular(self) -> bool:
        """Probability never flows toward fewer ground occupations."""
        coo = self.generator.tocoo()
        levels = np.array([sum(s) for s in self.states])
        off = coo.row != coo.col
        return bool(np.all(levels[coo.row[off]] > levels[coo.col[off]]))


def integrate(
    spec: SystemSpec,
    t_grid,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    method: str = "DOP853",
    state_cap: int = DEFAULT_STATE_CAP,
) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Populations on ``t_grid`` (rows) for every lattice state (columns).

    Column order is the canonical lattice order shared with the
    closed-form solver, so the two outputs are directly diffable.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or t_grid[0] < 0:
        raise ValidationError("t_grid must be a non-empty 1-D array starting at t >= 0")
    if np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be strictly ascending")
    system = RateEquationSystem.build(spec, state_cap)
    gen = system.generator
    sol = solve_ivp(
        lambda _t, y: gen @ y,
        (0.0, float(t_grid[-1]) if t_grid[-1] > 0 else 1e-12),
        system.initial_state(),
        method=method,
        t_eval=t_grid if t_grid[-1] > 0 else None,
        rtol=rel_tol,
        atol=abs_tol,
    )
    if not sol.success:
        raise IntegratorError(f"rate-equation integration failed: {sol.message}")
    if t_grid[-1] > 0:
        ys = sol.y.T
    else:
        ys = np.tile(system.initial_state(), (len(t_grid), 1))
    return ys, list(system.states)


def steady_state_by_integration(
    spec: SystemSpec,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    horizon_factor: float = 50.0,
    state_cap: int = DEFAULT_STATE_CAP,
):
    """Ground-simplex distribution from the long-time limit of the ODE.

    Integrates to ``t_end = horizon_factor / (N * Gamma_min)`` (every
    interior state decays at least at rate ~N*Gamma_min, so the slowest
    transient is suppressed by e^-horizon_factor), verifies stationarity
    and returns the renormalized ground-state restriction.
    """
    from .steady import SteadyStateDistribution  # local import to avoid a cycle

    n = spec.n_emitters
    gamma_min = min(float(g) for g in spec.channels)
    t_end = horizon_factor / (n * gamma_min)
    system = RateEquationSystem.build(spec, state_cap)
    sol = solve_ivp(
        lambda _t, y: system.generator @ y,
        (0.0, t_end),
        system.initial_state(),
        method="DOP853",
        rtol=rel_tol,
        atol=abs_tol,
    )
    if not sol.success:
        raise IntegratorError(f"rate-equation integration failed: {sol.message}")
    y_end = sol.y[:, -1]
    rate_scale = float(n * spec.total_rate)
    residual = float(np.max(np.abs(system.generator @ y_end))) / rate_scale
    if residual > 1e-12:
        raise HorizonError(
            f"derivative residual {residual:.2e} at t={t_end:g}; "
            "increase horizon_factor"
        )
    ground = [i for i, s in enumerate(system.states) if sum(s) == n]
    probs = np.clip(y_end[ground], 0.0, None)
    probs /= probs.sum()
    states = [system.states[i] for i in ground]
    return SteadyStateDistribution(spec=spec, states=tuple(states), probabilities=tuple(probs))
