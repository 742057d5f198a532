"""Pure-Python chunk stepper for the collective-decay jump process.

This is the fallback used when the compiled extension is unavailable.
Its floating-point operations mirror the compiled kernel statement for
statement (same order, same pre-drawn random numbers), so both backends
produce bit-identical trajectories for the same seed.
"""

BACKEND_NAME = "python"


def run_chunk(gammas, occ, m, t, exps, unis, edges, counts, rec_times, rec_channels):
    """Advance ``len(exps)`` jumps; mutates occ/counts/rec_* in place.

    Returns the updated ``(m, t)``.  Channel weights are recomputed from
    the occupations at every chunk boundary (part of the reproducibility
    scheme: chunk size is fixed by the driver).
    """
    d = len(gammas)
    nb = len(edges) - 1 if len(edges) else 0
    w = [gammas[a] * (occ[a] + 1.0) for a in range(d)]
    wsum = 0.0
    for a in range(d):
        wsum += w[a]
    record = len(rec_times) > 0
    for k in range(len(exps)):
        lam = m * wsum
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
            rec_channels[k] = alpha
        if nb > 0 and edges[0] <= t < edges[nb]:
            lo, hi = 0, nb + 1
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
