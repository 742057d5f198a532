"""Closed-form, stochastic and mean-field solvers for multichannel
collective decay (Dicke superradiance with competing decay channels).

The package computes exact time-domain populations and emitted
intensities for N fully inverted emitters decaying through d collective
channels, the exact two-channel steady-state distribution with its order
parameter and susceptibility, large-N mean-field asymptotics, a
Gillespie-type trajectory simulator for sizes far beyond the lattice
methods, and a cavity-model check of the effective collective-decay
description.  Every closed-form result is cross-validated against an
independent rate-equation integrator.
"""

from .errors import (
    CutoffError,
    DivergentIntegral,
    HorizonError,
    IntegratorError,
    MultidickeError,
    NumericalError,
    PrecisionExhausted,
    ResourceCapError,
    ValidationError,
)
from .expsum import ExpPolySum, ExpTerm, as_rate, default_precision_bits
from .system import OccupationState, SystemSpec, decay_rate, lattice_size, lattice_states
from .trajectory import (
    BalancedCascade,
    PopulationTable,
    burst_predicate,
    find_peak,
    intensity,
    solve_balanced,
    solve_by_path_enumeration,
    solve_multichannel,
    solve_single_channel,
)
from .steady import (
    OrderParameterPoint,
    SteadyStateDistribution,
    independent_decay_fraction,
    order_parameter,
    steady_state_general,
    steady_state_two_channel,
)
from .meanfield import (
    StoppingTime,
    asymptotic_distribution,
    order_parameter_asymptotic,
    solve_stopping_time,
    susceptibility_asymptotic,
    thermal_log_ratio,
    yule_mean,
)
from .rate_ode import RateEquationSystem, integrate, steady_state_by_integration
from .cavity import (
    CavityModel,
    EffectiveRates,
    convergence_sweep,
    dicke_reference,
    effective_rates,
    simulate_full,
)
from .stochastic import (
    IntensityEstimate,
    TrajectoryBatch,
    TrajectoryRecord,
    available_backends,
    backend_name,
    estimate_intensity,
    simulate_batch,
    simulate_trajectory,
    sweep_order_parameter,
)

__version__ = "0.1.0"
