#!/usr/bin/env python3
"""Benchmark: compiled Gillespie kernel vs the pure-Python fallback.

Both kernels consume identical pre-drawn random streams and produce
bit-identical trajectories; this script measures the speed gap and
verifies the identity on the way.  Run from the repository root:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from multidicke import SystemSpec, simulate_batch
from multidicke.stochastic import available_backends

CASES = [
    ("N=1e3, d=2, 200 traj", SystemSpec(1_000, ("0.2", "0.8")), 200),
    ("N=1e4, d=2,  50 traj", SystemSpec(10_000, ("0.2", "0.8")), 50),
    ("N=1e5, d=2,  10 traj", SystemSpec(100_000, ("0.2", "0.8")), 10),
    ("N=1e5, d=4,  10 traj", SystemSpec(100_000, ("0.1", "0.2", "0.3", "0.4")), 10),
]


def run_case(label, spec, n_traj, backend):
    start = time.perf_counter()
    batch = simulate_batch(spec, n_traj, master_seed=42, backend=backend)
    elapsed = time.perf_counter() - start
    steps = spec.n_emitters * n_traj
    return elapsed, steps / elapsed / 1e6, batch


def main():
    backends = available_backends()
    print(f"available backends: {backends}")
    if "compiled" not in backends:
        print("compiled kernel not built; benchmarking the fallback only")
    header = f"{'case':<24}" + "".join(f"{b:>16}" for b in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, spec, n_traj in CASES:
        elapsed_by = {}
        row = f"{label:<24}"
        batches = {}
        for backend in backends:
            elapsed, msteps, batch = run_case(label, spec, n_traj, backend)
            elapsed_by[backend] = elapsed
            batches[backend] = batch
            row += f"{elapsed:>9.2f}s {msteps:>4.0f}M/s"
        if len(backends) == 2:
            row += f"{elapsed_by['python'] / elapsed_by['compiled']:>9.1f}x"
            a, b = batches["compiled"], batches["python"]
            assert np.array_equal(a.channel_counts, b.channel_counts)
            assert a.final_states == b.final_states
            row += "  (bit-identical)"
        print(row)


if __name__ == "__main__":
    main()
