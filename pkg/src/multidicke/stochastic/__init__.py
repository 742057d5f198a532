"""Exact-in-distribution jump Monte Carlo for the collective cascade.

One trajectory repeats: weights ``w_a = G_a (n_a + 1)``, total ``W``,
jump rate ``L = m W``; waiting time ~ Exponential(L); channel chosen
with probability ``w_a / W``; the chosen occupation and the remaining
excitation count update.  N jumps end a trajectory, so cost is O(N d)
and N = 10^7 is routine with the compiled kernel.

Randomness comes from counter-based Philox streams keyed by
``(master_seed, trajectory_index)``: trajectories are independent,
order-independent, and reproducible bit-exactly regardless of batch
splitting or backend.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..system import SystemSpec
from ._backend import available_backends, backend_name, get_kernel

__all__ = [
    "TrajectoryRecord",
    "TrajectoryBatch",
    "IntensityEstimate",
    "simulate_trajectory",
    "simulate_batch",
    "estimate_intensity",
    "sweep_order_parameter",
    "default_bin_edges",
    "available_backends",
    "backend_name",
]

#: steps drawn per RNG call; part of the reproducibility scheme
CHUNK = 1 << 16

SCHEME = f"philox2x64/chunk{CHUNK}/v1"

#: full per-jump records are refused above this N by default
DEFAULT_RECORD_CAP = 100_000

_MASK64 = (1 << 64) - 1


def _rng(master_seed: int, index: int) -> np.random.Generator:
    key = np.array([master_seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class TrajectoryRecord:
    """Full jump history of one trajectory."""

    jump_times: np.ndarray
    jump_channels: np.ndarray
    final_occupations: tuple[int, ...]
    seed: int
    index: int = 0
    scheme: str = SCHEME


@dataclass
class TrajectoryBatch:
    """Streamed aggregates over many trajectories.

    Occupation moments are exact integers, so merging partial batches is
    associative and bit-reproducible: any reduction tree over disjoint
    trajectory index ranges gives the same aggregates as one sequential
    pass (thread or worker count can never change results).
    """

    spec: SystemSpec
    master_seed: int
    n_trajectories: int
    backend: str
    bin_edges: np.ndarray
    channel_counts: np.ndarray  # (n_bins, d) int64 jump counts
    final_states: Counter
    occ_sum: list  # per-channel sum of final occupations (exact ints)
    occ_sumsq: list
    records: list[TrajectoryRecord] | None = None
    scheme: str = SCHEME

    def n_bar(self, channel: int) -> tuple[float, float]:
        """Mean final occupation fraction of a channel and its standard error."""
        t = self.n_trajectories
        n = self.spec.n_emitters
        mean = self.occ_sum[channel] / (t * n)
        var = max(self.occ_sumsq[channel] / (t * n * n) - mean**2, 0.0)
        se = (var / t) ** 0.5
        return float(mean), float(se)

    def final_histogram_by_x(self) -> np.ndarray:
        """Two-channel convenience: counts of final x = n_2 (length N+1)."""
        if self.spec.d != 2:
            raise ValidationError("final_histogram_by_x needs d = 2")
        out = np.zeros(self.spec.n_emitters + 1, dtype=np.int64)
        for state, c in self.final_states.items():
            out[state[1]] += c
        return out

    def merge(self, other: "TrajectoryBatch") -> "TrajectoryBatch":
        """Combine aggregates of two batches over disjoint index ranges."""
        if (
            self.spec != other.spec
            or self.master_seed != other.master_seed
            or self.scheme != other.scheme
            or not np.array_equal(self.bin_edges, other.bin_edges)
        ):
            raise ValidationError("batches to merge must share spec, seed, scheme and bins")
        records = None
        if self.records is not None and other.records is not None:
            records = self.records + other.records
        return TrajectoryBatch(
            spec=self.spec,
            master_seed=self.master_seed,
            n_trajectories=self.n_trajectories + other.n_trajectories,
            backend=self.backend,
            bin_edges=self.bin_edges,
            channel_counts=self.channel_counts + other.channel_counts,
            final_states=self.final_states + other.final_states,
            occ_sum=[a + b for a, b in zip(self.occ_sum, other.occ_sum)],
            occ_sumsq=[a + b for a, b in zip(self.occ_sumsq, other.occ_sumsq)],
            records=records,
        )


def default_bin_edges(spec: SystemSpec, n_bins: int = 200) -> np.ndarray:
    """Log-spaced bins spanning the fastest and slowest timescales."""
    n = spec.n_emitters
    total = float(spec.total_rate)
    slowest = min(float(g) for g in spec.channels)
    lo = 1e-2 / (n * total)
    hi = 1e2 / slowest
    return np.geomspace(lo, hi, n_bins + 1)


def _run_trajectory(kernel, gammas, n, master_seed, index, edges, counts, record):
    rng = _rng(master_seed, index)
    occ = np.zeros(len(gammas), dtype=np.int64)
    if record:
        times = np.empty(n, dtype=float)
        channels = np.empty(n, dtype=np.int16)
    else:
        times = np.empty(0, dtype=float)
        channels = np.empty(0, dtype=np.int16)
    m, t = n, 0.0
    done = 0
    while m > 0:
        k = min(CHUNK, m)
        exps = rng.standard_exponential(k)
        unis = rng.random(k)
        m, t = kernel.run_chunk(
            gammas,
            occ,
            m,
            t,
            exps,
            unis,
            edges,
            counts,
            times[done : done + k],
            channels[done : done + k],
        )
        done += k
    return occ, times, channels


def simulate_trajectory(
    spec: SystemSpec, seed: int, index: int = 0, backend: str | None = None
) -> TrajectoryRecord:
    """One full trajectory with per-jump times and channels."""
    kernel = get_kernel(backend)
    gammas = spec.channels_float()
    if len(gammas) > 64:
        raise ValidationError("at most 64 channels are supported")
    empty_edges = np.empty(0, dtype=float)
    empty_counts = np.zeros((0, spec.d), dtype=np.int64)
    occ, times, channels = _run_trajectory(
        kernel, gammas, spec.n_emitters, seed, index, empty_edges, empty_counts, True
    )
    return TrajectoryRecord(
        jump_times=times,
        jump_channels=channels,
        final_occupations=tuple(int(x) for x in occ),
        seed=int(seed),
        index=int(index),
    )


def simulate_batch(
    spec: SystemSpec,
    n_trajectories: int,
    master_seed: int,
    bins: np.ndarray | None = None,
    n_bins: int = 200,
    record: bool = False,
    record_cap: int = DEFAULT_RECORD_CAP,
    backend: str | None = None,
    index_base: int = 0,
    progress=None,
) -> TrajectoryBatch:
    """Aggregate ``n_trajectories`` independent trajectories.

    Per-jump records are only kept on request and below ``record_cap``
    emitters; everything else streams into fixed-size aggregates.
    ``progress``, when given, is called as ``progress(done, total)`` at
    most ~50 times over the batch (never touches the results).
    """
    if n_trajectories < 1:
        raise ValidationError("n_trajectories must be positive")
    kernel = get_kernel(backend)
    gammas = spec.channels_float()
    if len(gammas) > 64:
        raise ValidationError("at most 64 channels are supported")
    if record and spec.n_emitters > record_cap:
        raise ValidationError(
            f"per-jump records refused for N > {record_cap}; use streaming aggregates"
        )
    edges = np.asarray(bins, dtype=float) if bins is not None else default_bin_edges(spec, n_bins)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be a 1-D ascending array")
    counts = np.zeros((len(edges) - 1, spec.d), dtype=np.int64)
    final_states: Counter = Counter()
    occ_sum = [0] * spec.d
    occ_sumsq = [0] * spec.d
    records = [] if record else None
    n = spec.n_emitters
    stride = max(1, n_trajectories // 50)
    for i in range(n_trajectories):
        occ, times, channels = _run_trajectory(
            kernel, gammas, n, master_seed, index_base + i, edges, counts, record
        )
        state = tuple(int(x) for x in occ)
        final_states[state] += 1
        for alpha, occupation in enumerate(state):
            occ_sum[alpha] += occupation
            occ_sumsq[alpha] += occupation * occupation
        if record:
            records.append(
                TrajectoryRecord(times, channels, state, int(master_seed), index_base + i)
            )
        if progress is not None and ((i + 1) % stride == 0 or i + 1 == n_trajectories):
            progress(i + 1, n_trajectories)
    return TrajectoryBatch(
        spec=spec,
        master_seed=int(master_seed),
        n_trajectories=int(n_trajectories),
        backend=kernel.BACKEND_NAME,
        bin_edges=edges,
        channel_counts=counts,
        final_states=final_states,
        occ_sum=occ_sum,
        occ_sumsq=occ_sumsq,
        records=records,
    )


@dataclass(frozen=True)
class IntensityEstimate:
    """Binned jump-rate estimate of the emitted intensity.

    The expected jump rate per trajectory per unit time in channel a
    equals I_a(t) in units of the transition energy, so ``rates`` is a
    direct estimator of the closed-form intensity; errors are Poisson.
    Empty bins report zero rate with an infinite relative error.
    """

    bin_edges: np.ndarray
    rates: np.ndarray  # (n_bins, d)
    std_errors: np.ndarray
    rel_errors: np.ndarray
    n_trajectories: int

    @property
    def centers(self) -> np.ndarray:
        return np.sqrt(self.bin_edges[:-1] * self.bin_edges[1:])

    @property
    def total_rate(self) -> np.ndarray:
        return self.rates.sum(axis=1)

    def peak_time(self, channel: int | None = None) -> float:
        """Center of the bin with the highest (total or per-channel) rate."""
        series = self.total_rate if channel is None else self.rates[:, channel]
        return float(self.centers[int(np.argmax(series))])


def estimate_intensity(batch: TrajectoryBatch) -> IntensityEstimate:
    if batch.n_trajectories < 1:
        raise ValidationError("batch is empty")
    widths = np.diff(batch.bin_edges)[:, None]
    denom = batch.n_trajectories * widths
    rates = batch.channel_counts / denom
    std = np.sqrt(batch.channel_counts) / denom
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(batch.channel_counts > 0, std / rates, np.inf)
    return IntensityEstimate(
        bin_edges=batch.bin_edges,
        rates=rates,
        std_errors=std,
        rel_errors=rel,
        n_trajectories=batch.n_trajectories,
    )


def sweep_order_parameter(
    n_list,
    r_grid,
    trajectories_per_point: int,
    master_seed: int,
    backend: str | None = None,
) -> list[dict]:
    """Monte Carlo order parameter over an (N, r) grid.

    Each grid point gets its own trajectory index block (point << 32), so
    results per point are reproducible independently of the grid layout.
    """
    rows = []
    point = 0
    for n in n_list:
        for r in r_grid:
            spec = SystemSpec(int(n), (1, r))
            batch = simulate_batch(
                spec,
                trajectories_per_point,
                master_seed,
                bins=np.array([1e-12, 1.0]),
                backend=backend,
                index_base=point << 32,
            )
            mean, se = batch.n_bar(1)
            rows.append(
                {
                    "n_emitters": int(n),
                    "r": float(r),
                    "n_bar_2": mean,
                    "std_error": se,
                    "n_trajectories": trajectories_per_point,
                }
            )
            point += 1
    return rows
