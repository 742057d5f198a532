"""Full atoms-plus-cavity dynamics versus the effective collective decay.

A lossy cavity mode coupled to the collective spin mediates dissipation;
when the mode decays much faster than the coupling (kappa >> g) it can be
eliminated, leaving pure collective decay at ``4 g^2 kappa/(kappa^2 + 4
Delta^2)`` (plus a level shift that vanishes on resonance).  This module
integrates the full Lindblad model on the symmetric-spin (x) truncated
Fock space and measures how fast the two descriptions converge as the
cavity gets worse, which validates using the effective cascade
everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CutoffError, IntegratorError, ResourceCapError, ValidationError
from .system import SystemSpec

__all__ = [
    "CavityModel",
    "EffectiveRates",
    "effective_rates",
    "simulate_full",
    "dicke_reference",
    "convergence_sweep",
    "FullSimResult",
]

#: symmetric-subspace (N+1)*(cutoff+1) dimension cap
DEFAULT_DIMENSION_CAP = 10_000

#: maximum tolerated population in the top Fock level
TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CavityModel:
    """N emitters uniformly coupled to one lossy cavity mode."""

    n_emitters: int
    coupling: float  # g
    kappa: float
    detuning: float = 0.0
    fock_cutoff: int = 10

    def __post_init__(self):
        if self.n_emitters < 1:
            raise ValidationError("n_emitters must be positive")
        # coupling zero is allowed (decoupled limit: atoms frozen)
        if self.coupling < 0 or self.kappa <= 0:
            raise ValidationError("coupling must be >= 0 and kappa > 0")
        if self.fock_cutoff < 1:
            raise ValidationError("fock_cutoff must be at least 1")

    @property
    def in_bad_cavity_regime(self) -> bool:
        """Recorded validity hint (kappa >= 10 g); never enforced."""
        return self.kappa >= 10.0 * self.coupling

    @property
    def dimension(self) -> int:
        return (self.n_emitters + 1) * (self.fock_cutoff + 1)


@dataclass(frozen=True)
class EffectiveRates:
    """Collective decay rate and level shift left after eliminating the mode."""

    gamma_eff: float
    lamb_shift: float


def effective_rates(model: CavityModel) -> EffectiveRates:
    """``Gamma = 4 g^2 kappa / (kappa^2 + 4 Delta^2)`` and the matching
    shift ``4 g^2 Delta / (kappa^2 + 4 Delta^2)`` (zero on resonance)."""
    g, kappa, delta = model.coupling, model.kappa, model.detuning
    denom = kappa**2 + 4.0 * delta**2
    return EffectiveRates(
        gamma_eff=4.0 * g**2 * kappa / denom,
        lamb_shift=4.0 * g**2 * delta / denom,
    )


@dataclass(frozen=True)
class FullSimResult:
    t: np.ndarray
    sdag_s: np.ndarray  # <S† S>
    photon_number: np.ndarray  # <a† a>
    trace_error: float
    hermiticity_error: float
    max_tail_population: float


def _operators(model: CavityModel):
    """Collective lowering S and mode annihilator a on the product basis
    |m> x |p>, index i = m * (cutoff+1) + p."""
    n, pmax = model.n_emitters, model.fock_cutoff
    na, np_ = n + 1, pmax + 1
    s_atom = np.zeros((na, na))
    for m in range(1, na):
        s_atom[m - 1, m] = np.sqrt(m * (n + 1 - m))
    a_mode = np.zeros((np_, np_))
    for p in range(1, np_):
        a_mode[p - 1, p] = np.sqrt(p)
    eye_a = np.eye(na)
    eye_f = np.eye(np_)
    S = np.kron(s_atom, eye_f)
    A = np.kron(eye_a, a_mode)
    return S, A


def simulate_full(
    model: CavityModel,
    t_grid,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
) -> FullSimResult:
    """Integrate the full Lindblad model from all atoms excited, mode empty.

    The coherent part is ``g (a S† + a† S)`` at resonance (the detuning
    term ``Delta a† a`` is included when nonzero); the mode decays at
    kappa.  Raises :class:`CutoffError` if the top Fock level ever holds
    more than ``1e-6`` population.
    """
    if model.dimension > dimension_cap:
        raise ResourceCapError(
            f"Hilbert dimension {model.dimension} exceeds the cap {dimension_cap}"
        )
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2 or t_grid[0] < 0:
        raise ValidationError("t_grid must be 1-D with t[0] >= 0")
    S, A = _operators(model)
    g, kappa, delta = model.coupling, model.kappa, model.detuning
    H = g * (A @ S.conj().T + A.conj().T @ S)
    if delta:
        H = H + delta * (A.conj().T @ A)
    n_ph = A.conj().T @ A
    dim = model.dimension

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (H @ rho - rho @ H)
        a_rho = A @ rho
        drho += kappa * (a_rho @ A.conj().T - 0.5 * (n_ph @ rho + rho @ n_ph))
        return drho.ravel()

    rho0 = np.zeros((dim, dim), dtype=complex)
    # all atoms excited (m = N), cavity vacuum (p = 0)
    idx0 = model.n_emitters * (model.fock_cutoff + 1)
    rho0[idx0, idx0] = 1.0
    sol = solve_ivp(
        rhs,
        (float(t_grid[0]), float(t_grid[-1])),
        rho0.ravel(),
        t_eval=t_grid,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise IntegratorError(f"cavity Lindblad integration failed: {sol.message}")
    sds = S.conj().T @ S
    sdag_s = np.empty(len(t_grid))
    photons = np.empty(len(t_grid))
    trace_err = 0.0
    herm_err = 0.0
    tail = 0.0
    n, pmax = model.n_emitters, model.fock_cutoff
    tail_idx = [m * (pmax + 1) + pmax for m in range(n + 1)]
    for j in range(len(t_grid)):
        rho = sol.y[:, j].reshape(dim, dim)
        herm_err = max(herm_err, float(np.max(np.abs(rho - rho.conj().T))))
        rho = 0.5 * (rho + rho.conj().T)
        tr = float(np.real(np.trace(rho)))
        trace_err = max(trace_err, abs(tr - 1.0))
        sdag_s[j] = float(np.real(np.trace(sds @ rho)))
        photons[j] = float(np.real(np.trace(n_ph @ rho)))
        tail = max(tail, float(np.real(rho[tail_idx, tail_idx].sum())))
    if tail > TAIL_TOLERANCE:
        raise CutoffError(
            f"top Fock level holds {tail:.2e} population; raise fock_cutoff"
        )
    return FullSimResult(
        t=t_grid,
        sdag_s=sdag_s,
        photon_number=photons,
        trace_error=trace_err,
        hermiticity_error=herm_err,
        max_tail_population=tail,
    )


def dicke_reference(model: CavityModel, t_grid) -> np.ndarray:
    """<S† S>(t) of the effective collective-decay cascade with
    ``Gamma = 4 g^2 / kappa`` (resonant elimination), via the closed-form
    solver: <S† S> = sum_m m (N+1-m) p_m = I(t)/Gamma."""
    from .trajectory import intensity, solve_single_channel

    gamma = effective_rates(model).gamma_eff
    spec = SystemSpec(model.n_emitters, (Fraction(gamma),))
    table = solve_single_channel(spec)
    itot = intensity(table)
    return itot.evaluate_grid(np.asarray(t_grid, dtype=float)) / gamma


def convergence_sweep(
    n_emitters: int = 5,
    fock_cutoff: int = 10,
    kappa_over_g: tuple = (1.0, 3.0, 10.0, 30.0, 100.0),
    coupling: float = 1.0,
    points: int = 400,
    horizon: float = 5.0,
) -> list[dict]:
    """Distance between full and effective dynamics per kappa/g.

    Each ratio is integrated to ``horizon / Gamma_eff`` so every curve
    covers the same number of collective lifetimes; the deviation is the
    sup distance of <S† S>, also reported relative to N.
    """
    rows = []
    for ratio in kappa_over_g:
        model = CavityModel(
            n_emitters=n_emitters,
            coupling=coupling,
            kappa=float(ratio) * coupling,
            fock_cutoff=fock_cutoff,
        )
        gamma = effective_rates(model).gamma_eff
        t_grid = np.linspace(0.0, horizon / gamma, points)
        full = simulate_full(model, t_grid)
        ref = dicke_reference(model, t_grid)
        dev = float(np.max(np.abs(full.sdag_s - ref)))
        rows.append(
            {
                "kappa_over_g": float(ratio),
                "max_deviation": dev,
                "rel_deviation": dev / n_emitters,
                "trace_error": full.trace_error,
                "max_tail_population": full.max_tail_population,
            }
        )
    return rows
