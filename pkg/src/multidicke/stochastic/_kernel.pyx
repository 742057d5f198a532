# cython: language_level=3
"""Compiled chunk stepper for the collective-decay jump process.

Performs the same floating-point operations in the same order as the
pure-Python fallback (see _kernel_py.py); the build disables FMA
contraction so the two backends are bit-identical.
"""

from libc.stdint cimport int16_t, int64_t

BACKEND_NAME = "compiled"


def run_chunk(double[::1] gammas, int64_t[::1] occ, long long m, double t,
              double[::1] exps, double[::1] unis,
              double[::1] edges, int64_t[:, ::1] counts,
              double[::1] rec_times, int16_t[::1] rec_channels):
    """Advance len(exps) jumps; mutates occ/counts/rec_* in place."""
    cdef Py_ssize_t d = gammas.shape[0]
    cdef Py_ssize_t nb = edges.shape[0] - 1 if edges.shape[0] > 0 else 0
    cdef Py_ssize_t n_steps = exps.shape[0]
    cdef bint record = rec_times.shape[0] > 0
    cdef double w[64]
    cdef double wsum = 0.0
    cdef double lam, x
    cdef Py_ssize_t a, k, alpha, lo, hi, mid
    cdef double mm

    for a in range(d):
        w[a] = gammas[a] * (occ[a] + 1.0)
    for a in range(d):
        wsum += w[a]

    for k in range(n_steps):
        mm = <double> m
        lam = mm * wsum
        t = t + exps[k] / lam
        x = unis[k] * wsum
        alpha = 0
        while alpha < d - 1:
            x = x - w[alpha]
            if x < 0.0:
                break
            alpha += 1
        if record:
            rec_times[k] = t
            rec_channels[k] = <int16_t> alpha
        if nb > 0 and edges[0] <= t < edges[nb]:
            lo = 0
            hi = nb + 1
            while lo < hi:
                mid = (lo + hi) // 2
                if edges[mid] <= t:
                    lo = mid + 1
                else:
                    hi = mid
            counts[lo - 1, alpha] += 1
        w[alpha] += gammas[alpha]
        wsum += gammas[alpha]
        occ[alpha] += 1
        m -= 1
    return m, t
