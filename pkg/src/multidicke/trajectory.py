"""Closed-form populations and intensities for collective decay cascades.

The populations of the occupation lattice are built bottom-up by a
dynamic program over states: each state's population is the convolution
of a rate-weighted mix of its predecessors with the state's own decay
exponential.  This is algebraically identical to summing the nested
convolutions over every jump path but costs one convolution per lattice
state instead of one chain per path.  A brute-force path enumeration is
kept alongside as the correctness reference for tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import PrecisionExhausted, ResourceCapError, ValidationError
from .expsum import ExpPolySum, default_precision_bits
from .system import SystemSpec, compositions, decay_rate, lattice_size, lattice_states

__all__ = [
    "PopulationTable",
    "BalancedCascade",
    "solve_single_channel",
    "solve_multichannel",
    "solve_balanced",
    "solve_by_path_enumeration",
    "intensity",
    "find_peak",
    "burst_predicate",
    "DEFAULT_LATTICE_CAP",
]

#: Refuse full-lattice solves above this many states; point users at the
#: stochastic simulator instead.
DEFAULT_LATTICE_CAP = 2_000_000


@dataclass(frozen=True)
class PopulationTable:
    """Map from occupation vectors to their closed-form populations.

    ``complete`` is True when the table covers the full lattice (required
    for intensities and normalization checks); targeted solves only carry
    the ancestor cone of the requested state.
    """

    system: SystemSpec
    entries: Mapping[tuple[int, ...], ExpPolySum]
    complete: bool = True

    @property
    def states(self) -> list[tuple[int, ...]]:
        if self.complete:
            return lattice_states(self.system)
        return sorted(self.entries, key=lambda s: (sum(s), s))

    def population(self, state: Sequence[int]) -> ExpPolySum:
        return self.entries[tuple(state)]

    def evaluate_grid(self, ts) -> np.ndarray:
        """Populations on a time grid, one column per canonical state."""
        cols = [self.entries[s].evaluate_grid(ts) for s in self.states]
        return np.column_stack(cols)

    def normalization_residual(self, ts) -> float:
        """max_t |sum_states p(t) - 1| over the grid."""
        total = self.evaluate_grid(ts).sum(axis=1)
        return float(np.max(np.abs(total - 1.0)))

    def intensity(self, channel: int | None = None) -> ExpPolySum:
        return intensity(self, channel)

    def ground_constants(self) -> dict[tuple[int, ...], "object"]:
        """t -> infinity limit of every ground state (exact constant term)."""
        n = self.system.n_emitters
        return {
            s: self.entries[s].constant_term
            for s in self.states
            if sum(s) == n
        }


@dataclass(frozen=True)
class BalancedCascade:
    """Level populations for exactly balanced channels.

    With all rates equal every state at a level is equally likely, so only
    the N+1 level populations are stored; per-state populations divide by
    the number of same-level states.  This is what makes N in the hundreds
    tractable for any d.
    """

    system: SystemSpec
    level_populations: tuple[ExpPolySum, ...]  # index m = remaining excitations

    def states_at_level(self, m: int) -> int:
        n, d = self.system.n_emitters, self.system.d
        return comb(n - m + d - 1, d - 1)

    def level_population(self, m: int) -> ExpPolySum:
        return self.level_populations[m]

    def state_population(self, state: Sequence[int]) -> ExpPolySum:
        m = self.system.n_emitters - sum(state)
        return self.level_populations[m].scaled(Fraction(1, self.states_at_level(m)))

    def intensity(self, channel: int | None = None) -> ExpPolySum:
        """Total (or per-channel, = total/d) emitted intensity."""
        n, d = self.system.n_emitters, self.system.d
        rate_over_d = self.system.channels[0]
        bits = max(p.precision_bits for p in self.level_populations)
        acc = ExpPolySum.zero(bits)
        for m in range(1, n + 1):
            acc = acc + self.level_populations[m].scaled(rate_over_d * m * (n - m + d))
        if channel is not None:
            if not 0 <= channel < d:
                raise ValidationError("channel index out of range")
            acc = acc.scaled(Fraction(1, d))
        return acc

    def expand(self, lattice_cap: int = DEFAULT_LATTICE_CAP) -> PopulationTable:
        """Materialize the full per-state table (small lattices only)."""
        n, d = self.system.n_emitters, self.system.d
        if lattice_size(n, d) > lattice_cap:
            raise ResourceCapError(
                f"lattice has {lattice_size(n, d)} states, above the cap {lattice_cap}"
            )
        entries = {}
        for q in range(n + 1):
            per_state = self.state_population((q,) + (0,) * (d - 1)) if d else None
            for s in compositions(q, d):
                entries[s] = per_state
        return PopulationTable(self.system, entries, complete=True)

    def normalization_residual(self, ts) -> float:
        total = np.zeros(len(ts))
        for p in self.level_populations:
            total += p.evaluate_grid(ts)
        return float(np.max(np.abs(total - 1.0)))


def _check_normalization(sums: Sequence[ExpPolySum], spec: SystemSpec, bits: int) -> None:
    """Raise PrecisionExhausted when the populations no longer sum to one.

    Total probability is exactly one in the algebra, so any visible
    residual on a sample grid is accumulated rounding/pruning noise.
    """
    import gmpy2

    scale = float(spec.n_emitters * spec.total_rate)
    ts = [x / scale for x in (0.01, 0.1, 0.5, 2.0, 10.0, 50.0)]
    for t in ts:
        with gmpy2.context(precision=bits + 32):
            total = sum((s.evaluate(t) for s in sums), start=0)
        if abs(float(total) - 1.0) > 1e-9:
            raise PrecisionExhausted(
                f"populations sum to {float(total)!r} at t={t:g}; "
                f"precision_bits={bits} is too low for N={spec.n_emitters}"
            )


def _cascade_levels(
    n: int, rate_over_d: Fraction, d: int, precision_bits: int
) -> list[ExpPolySum]:
    """Shared downward recurrence for any balanced cascade.

    Level rates are ``L_k = (G/d) k (n - k + d)`` and each step convolves
    with the next level's exponential, carrying the jump prefactor
    ``(G/d)(m+1)(n-m)``.
    """
    lam = lambda k: rate_over_d * k * (n - k + d)
    levels: list[ExpPolySum | None] = [None] * (n + 1)
    levels[n] = ExpPolySum.exponential(lam(n), precision_bits=precision_bits)
    for m in range(n - 1, -1, -1):
        step = ExpPolySum.exponential(lam(m), precision_bits=precision_bits)
        levels[m] = levels[m + 1].convolve(step).scaled(rate_over_d * (m + 1) * (n - m))
    return levels


def solve_single_channel(
    spec: SystemSpec, precision_bits: int | None = None
) -> PopulationTable:
    """Exact populations for one collective channel (d = 1).

    ``p_N = exp(-L_N t)`` and each lower level is the convolution of the
    level above with its own exponential times ``Gamma h_{m+1}``; equal
    rates ``L_m = L_{N+1-m}`` fall out of the generic degenerate rule.
    """
    if spec.d != 1:
        raise ValidationError("solve_single_channel requires exactly one channel")
    bits = precision_bits or default_precision_bits(spec.n_emitters)
    levels = _cascade_levels(spec.n_emitters, spec.channels[0], 1, bits)
    _check_normalization(levels, spec, bits)
    entries = {(spec.n_emitters - m,): levels[m] for m in range(spec.n_emitters + 1)}
    return PopulationTable(spec, entries, complete=True)


def solve_balanced(
    spec: SystemSpec, precision_bits: int | None = None
) -> BalancedCascade:
    """Level populations for exactly equal channel rates.

    Every path through a level sees the same segment rate, so the whole
    lattice collapses onto a single cascade; states with equal remaining
    excitation share the level population uniformly.
    """
    if not spec.is_balanced:
        raise ValidationError("solve_balanced requires all channel rates equal")
    n, d = spec.n_emitters, spec.d
    bits = precision_bits or default_precision_bits(n)
    per_state = _cascade_levels(n, spec.channels[0], d, bits)
    # the cascade recurrence yields the (state-independent) population of a
    # single level-m state; the level total multiplies in the state count
    levels = [
        per_state[m].scaled(comb(n - m + d - 1, d - 1)) for m in range(n + 1)
    ]
    _check_normalization(levels, spec, bits)
    return BalancedCascade(spec, tuple(levels))


def solve_multichannel(
    spec: SystemSpec,
    target: Sequence[int] | None = None,
    precision_bits: int | None = None,
    lattice_cap: int = DEFAULT_LATTICE_CAP,
) -> PopulationTable:
    """Populations for d >= 2 channels by dynamic programming on the lattice.

    Seeds the fully excited state with ``exp(-L_N t)`` and fills each state
    from its predecessors:
    ``p_n = [sum_a G_a (m+1) n_a p_{n - e_a}] * exp(-L(n) t)``.
    With ``target`` given, only the ancestor cone ``u <= target`` is built
    and the returned table is marked incomplete.
    """
    if spec.d < 2:
        raise ValidationError("solve_multichannel requires at least two channels")
    n, d = spec.n_emitters, spec.d
    if target is None:
        if lattice_size(n, d) > lattice_cap:
            raise ResourceCapError(
                f"lattice has {lattice_size(n, d)} states, above the cap "
                f"{lattice_cap}; use the stochastic simulator for systems this large"
            )
    else:
        target = tuple(int(x) for x in target)
        if len(target) != d or any(x < 0 for x in target) or sum(target) > n:
            raise ValidationError("target must be a valid occupation vector")
    bits = precision_bits or default_precision_bits(n)

    origin = (0,) * d
    entries: dict[tuple[int, ...], ExpPolySum] = {
        origin: ExpPolySum.exponential(decay_rate(spec, origin), precision_bits=bits)
    }
    max_q = n if target is None else sum(target)
    for q in range(1, max_q + 1):
        m = n - q
        for state in compositions(q, d):
            if target is not None and any(s > t for s, t in zip(state, target)):
                continue
            mix = ExpPolySum.zero(bits)
            for alpha in range(d):
                if state[alpha] == 0:
                    continue
                pred = state[:alpha] + (state[alpha] - 1,) + state[alpha + 1 :]
                weight = spec.channels[alpha] * (m + 1) * state[alpha]
                mix = mix + entries[pred].scaled(weight)
            step = ExpPolySum.exponential(decay_rate(spec, state), precision_bits=bits)
            entries[state] = mix.convolve(step)
    if target is None:
        _check_normalization(list(entries.values()), spec, bits)
    return PopulationTable(spec, entries, complete=target is None)


def _multiset_permutations(counts: list[int]) -> Iterator[tuple[int, ...]]:
    if not any(counts):
        yield ()
        return
    for alpha, c in enumerate(counts):
        if c == 0:
            continue
        counts[alpha] -= 1
        for rest in _multiset_permutations(counts):
            yield (alpha,) + rest
        counts[alpha] += 1


def solve_by_path_enumeration(
    spec: SystemSpec,
    target: Sequence[int],
    precision_bits: int | None = None,
    max_paths: int = 10_000,
) -> ExpPolySum:
    """Reference population of one state by explicit path summation.

    Walks every distinct jump sequence from the fully excited state to
    ``target``, convolving the segment exponentials along the way, then
    applies the prefactor ``G_1^{n_1}...G_d^{n_d} N! n_1!...n_d!/m!``.
    Exponential in the jump count; used to certify the lattice DP.
    """
    target = tuple(int(x) for x in target)
    n, d = spec.n_emitters, spec.d
    q = sum(target)
    m = n - q
    n_paths = factorial(q)
    for x in target:
        n_paths //= factorial(x)
    if n_paths > max_paths:
        raise ResourceCapError(f"{n_paths} paths exceed the enumeration cap {max_paths}")
    bits = precision_bits or default_precision_bits(n)

    total = ExpPolySum.zero(bits)
    start_rate = decay_rate(spec, (0,) * d)
    for path in _multiset_permutations(list(target)):
        u = [0] * d
        k = n
        chain = ExpPolySum.exponential(start_rate, precision_bits=bits)
        for alpha in path:
            u[alpha] += 1
            k -= 1
            lam = k * sum((g * (x + 1) for g, x in zip(spec.channels, u)), Fraction(0))
            chain = chain.convolve(ExpPolySum.exponential(lam, precision_bits=bits))
        total = total + chain
    prefactor = Fraction(factorial(n), factorial(m))
    for g, x in zip(spec.channels, target):
        prefactor *= g**x * factorial(x)
    return total.scaled(prefactor)


def intensity(
    table: PopulationTable | BalancedCascade, channel: int | None = None
) -> ExpPolySum:
    """Emitted intensity in units of the transition energy.

    Per channel: ``I_a(t) = G_a sum_states m (n_a + 1) p(t)``; with
    ``channel=None`` the channels are summed.
    """
    if isinstance(table, BalancedCascade):
        return table.intensity(channel)
    if not table.complete:
        raise ValidationError("intensity requires a complete population table")
    spec = table.system
    if channel is not None and not 0 <= channel < spec.d:
        raise ValidationError("channel index out of range")
    bits = max(p.precision_bits for p in table.entries.values())
    acc = ExpPolySum.zero(bits)
    for state, pop in table.entries.items():
        m = spec.n_emitters - sum(state)
        if m == 0:
            continue
        if channel is None:
            weight = m * sum(
                (g * (x + 1) for g, x in zip(spec.channels, state)), Fraction(0)
            )
        else:
            weight = spec.channels[channel] * m * (state[channel] + 1)
        acc = acc + pop.scaled(weight)
    return acc


def find_peak(signal: ExpPolySum, rel_tol: float = 1e-10) -> tuple[float, float]:
    """Global maximum of a non-negative decaying signal on t in (0, inf).

    Coarse 200-point log-spaced scan bracketed between the fastest and
    slowest rates, then bisection on the sign of the derivative.  Signals
    that only decay return ``(0.0, signal(0))``.
    """
    lam_max = signal.max_rate()
    lam_min = signal.min_positive_rate()
    if lam_max == 0:
        return 0.0, float(signal.evaluate(0))
    lo = 1e-3 / float(lam_max)
    hi = 1e2 / float(lam_min if lam_min > 0 else lam_max)
    grid = np.concatenate([[0.0], np.geomspace(lo, hi, 200)])
    vals = signal.evaluate_grid(grid)
    k = int(np.argmax(vals))
    if k == 0:
        return 0.0, float(vals[0])
    deriv = signal.derivative()
    left = grid[k - 1]
    right = grid[k + 1] if k + 1 < len(grid) else grid[k] * 2.0
    while float(deriv.evaluate(left)) <= 0 and left > 1e-300:
        left /= 2.0
    if left <= 1e-300:
        return float(grid[k]), float(vals[k])
    while float(deriv.evaluate(right)) > 0:
        right *= 2.0
    while (right - left) > rel_tol * right:
        mid = 0.5 * (left + right)
        if float(deriv.evaluate(mid)) > 0:
            left = mid
        else:
            right = mid
    t_peak = 0.5 * (left + right)
    return t_peak, float(signal.evaluate(t_peak))


def burst_predicate(spec: SystemSpec, channel: int) -> bool:
    """Whether channel ``channel`` shows a superradiant burst:
    ``N - 1 > Gamma_0 / Gamma_channel`` (exact rational comparison)."""
    if not 0 <= channel < spec.d:
        raise ValidationError("channel index out of range")
    return spec.n_emitters - 1 > spec.total_rate / spec.channels[channel]
