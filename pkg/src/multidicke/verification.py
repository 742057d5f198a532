"""Cross-validation matrix behind the ``verify`` CLI subcommand.

Each check pits two independent routes to the same quantity against each
other (closed form vs rate equations, lattice DP vs path enumeration,
Monte Carlo vs exact law, full cavity model vs effective cascade) and
reports a pass/fail with the measured metric.  The quick set keeps N at
or below 10 and finishes well inside a minute; the full set adds the
expensive scaling and cavity sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import (
    SystemSpec,
    find_peak,
    intensity,
    simulate_batch,
    solve_balanced,
    solve_by_path_enumeration,
    solve_multichannel,
    solve_single_channel,
    steady_state_by_integration,
    steady_state_two_channel,
)
from .cavity import CavityModel, convergence_sweep, effective_rates
from .meanfield import solve_stopping_time
from .rate_ode import integrate as ode_integrate

__all__ = ["CheckResult", "run_verification", "QUICK_CHECKS", "FULL_CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    metric: float
    threshold: float
    detail: str

    def row(self) -> list:
        return [
            self.name,
            "pass" if self.passed else "FAIL",
            f"{self.metric:.3e}",
            f"{self.threshold:.3e}",
            self.detail,
        ]


def _grid(spec: SystemSpec, points: int = 40) -> np.ndarray:
    gamma_min = min(float(g) for g in spec.channels)
    return np.linspace(0.0, 5.0 / (spec.n_emitters * gamma_min), points)


def check_dynamics_vs_ode(seed: int) -> CheckResult:
    spec = SystemSpec(8, (1, 2))
    ts = _grid(spec)
    table = solve_multichannel(spec)
    closed = table.evaluate_grid(ts)
    ode, states = ode_integrate(spec, ts)
    err = float(np.max(np.abs(closed - ode)))
    return CheckResult(
        "closed-form populations vs rate equations (N=8, d=2, r=2)",
        err <= 1e-6,
        err,
        1e-6,
        "max-abs over full lattice and grid",
    )


def check_dp_vs_paths(seed: int) -> CheckResult:
    spec = SystemSpec(3, (1, 2))
    ts = np.linspace(0, 2.0, 9)
    table = solve_multichannel(spec)
    err = 0.0
    for state in table.states:
        ref = solve_by_path_enumeration(spec, state)
        err = max(
            err,
            float(np.max(np.abs(table.population(state).evaluate_grid(ts) - ref.evaluate_grid(ts)))),
        )
    return CheckResult(
        "lattice DP vs explicit path enumeration (N=3, d=2)",
        err <= 1e-10,
        err,
        1e-10,
        "max-abs over all 10 states",
    )


def check_steady_formula_vs_ode(seed: int) -> CheckResult:
    spec = SystemSpec(10, (1, Fraction(1, 2)))
    exact = steady_state_two_channel(10, Fraction(1, 2))
    ode = steady_state_by_integration(spec)
    err = max(abs(exact.probability(s) - ode.probability(s)) for s in exact.states)
    return CheckResult(
        "two-channel steady formula vs ODE limit (N=10, r=1/2)",
        err <= 1e-8,
        err,
        1e-8,
        "max-abs over ground states",
    )


def check_steady_flat(seed: int) -> CheckResult:
    exact = steady_state_two_channel(10, 1)
    err = float(np.max(np.abs(exact.as_array() - 1.0 / 11.0)))
    return CheckResult(
        "balanced steady state is flat (N=10, r=1)", err <= 1e-9, err, 1e-9, "|p - 1/(N+1)|"
    )


def check_photon_conservation(seed: int) -> CheckResult:
    spec = SystemSpec(5, (1, 2))
    table = solve_multichannel(spec)
    total = float(intensity(table).integral_to_infinity())
    err = abs(total - 5.0) / 5.0
    return CheckResult(
        "photon conservation int I_tot = N (N=5, d=2)", err <= 1e-6, err, 1e-6, "relative"
    )


def check_balanced_collapse(seed: int) -> CheckResult:
    spec = SystemSpec(6, (Fraction(1, 3),) * 3)
    ts = _grid(spec, 12)
    bal = solve_balanced(spec)
    full = solve_multichannel(spec)
    err = max(
        float(np.max(np.abs(full.population(s).evaluate_grid(ts) - bal.state_population(s).evaluate_grid(ts))))
        for s in full.states
    )
    return CheckResult(
        "balanced collapse vs full lattice (N=6, d=3)", err <= 1e-10, err, 1e-10, "max-abs"
    )


def check_mc_final_state(seed: int) -> CheckResult:
    from scipy.stats import chisquare

    spec = SystemSpec(3, (1, 2))
    batch = simulate_batch(spec, 100_000, seed, bins=np.array([1e-9, 1.0]))
    counts = batch.final_histogram_by_x()
    expected = steady_state_two_channel(3, 2).by_x() * batch.n_trajectories
    stat, p = chisquare(counts, expected)
    return CheckResult(
        "Monte Carlo final states vs exact law (N=3, chi^2)",
        p >= 1e-3,
        float(p),
        1e-3,
        f"p-value (stat={stat:.2f}), 1e5 trajectories",
    )


def check_mc_determinism(seed: int) -> CheckResult:
    spec = SystemSpec(500, ("0.2", "0.8"))
    a = simulate_batch(spec, 10, seed)
    b = simulate_batch(spec, 10, seed)
    same = (
        np.array_equal(a.channel_counts, b.channel_counts)
        and a.final_states == b.final_states
        and a.occ_sum == b.occ_sum
    )
    return CheckResult(
        "Monte Carlo determinism (same seed, bit-identical)",
        same,
        0.0 if same else 1.0,
        0.5,
        "aggregates compared exactly",
    )


def check_stopping_time(seed: int) -> CheckResult:
    st = solve_stopping_time(10**6, 0.4, 1.3)
    return CheckResult(
        "mean-field stopping time residual", st.residual <= 1e-12, st.residual, 1e-12, "relative"
    )


def check_effective_rates(seed: int) -> CheckResult:
    er = effective_rates(CavityModel(5, 1.0, 10.0, 5.0))
    err = max(abs(er.gamma_eff - 0.2), abs(er.lamb_shift - 0.1))
    return CheckResult(
        "cavity effective rate formula (g=1, k=10, D=5)", err <= 1e-12, err, 1e-12, "abs"
    )


def check_adiabatic_quick(seed: int) -> CheckResult:
    rows = convergence_sweep(n_emitters=3, fock_cutoff=6, kappa_over_g=(10.0, 100.0), points=160)
    dev = rows[-1]["rel_deviation"]
    ok = dev <= 0.05 and rows[0]["max_deviation"] > rows[1]["max_deviation"]
    return CheckResult(
        "bad-cavity limit matches collective decay (N=3, k/g=100)",
        ok,
        dev,
        0.05,
        "relative sup distance of <S^dag S>",
    )


def check_scaling_laws(seed: int) -> CheckResult:
    worst = 0.0
    n = 150
    for d in (1, 2, 4, 8):
        spec = SystemSpec(n, (Fraction(1, d),) * d)
        tp, vp = find_peak(solve_balanced(spec).intensity())
        worst = max(
            worst,
            abs(vp / ((n + d - 1) ** 2 / (4 * d + 1)) - 1),
            abs(tp / (np.log(n / d) * d / (n + d - 1)) - 1),
        )
    return CheckResult(
        "peak scaling laws (N=150, d in 1,2,4,8)", worst <= 0.10, worst, 0.10, "worst relative"
    )


def check_single_channel_vs_ode(seed: int) -> CheckResult:
    spec = SystemSpec(10, (1,))
    ts = _grid(spec)
    closed = solve_single_channel(spec).evaluate_grid(ts)
    ode, _ = ode_integrate(spec, ts)
    err = float(np.max(np.abs(closed - ode)))
    return CheckResult(
        "single-channel closed form vs rate equations (N=10)", err <= 1e-8, err, 1e-8, "max-abs"
    )


QUICK_CHECKS: list[Callable[[int], CheckResult]] = [
    check_single_channel_vs_ode,
    check_dynamics_vs_ode,
    check_dp_vs_paths,
    check_steady_formula_vs_ode,
    check_steady_flat,
    check_photon_conservation,
    check_balanced_collapse,
    check_mc_final_state,
    check_mc_determinism,
    check_stopping_time,
    check_effective_rates,
]

FULL_CHECKS: list[Callable[[int], CheckResult]] = QUICK_CHECKS + [
    check_adiabatic_quick,
    check_scaling_laws,
]


def run_verification(quick: bool = True, seed: int = 1) -> list[CheckResult]:
    checks = QUICK_CHECKS if quick else FULL_CHECKS
    return [check(seed) for check in checks]
