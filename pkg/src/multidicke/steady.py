"""Steady-state ground distributions, order parameter and susceptibility.

For two channels the stationary distribution over the ground states
``(N-x, x)`` has a closed form: a Gamma-function prefactor times a nested
sum over increasing index tuples ``1 <= L_1 < ... < L_x <= N``.  Summed
naively that is exponential in x; here it is evaluated by a prefix-sum
dynamic program over layers j = 1..x, O(N^2) for the full distribution.
The general-d route instead reads the constant terms of the closed-form
population table.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from .errors import ValidationError
from .expsum import as_rate
from .system import SystemSpec

__all__ = [
    "SteadyStateDistribution",
    "OrderParameterPoint",
    "steady_state_two_channel",
    "steady_state_general",
    "order_parameter",
    "independent_decay_fraction",
    "nested_sum_by_enumeration",
]

#: plenty for sums of positive terms; no cancellation happens here
DEFAULT_STEADY_PRECISION = 192


@dataclass(frozen=True)
class SteadyStateDistribution:
    """Probabilities over the ground simplex ``sum(n) = N``."""

    spec: SystemSpec
    states: tuple[tuple[int, ...], ...]
    probabilities: tuple

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probabilities], dtype=float)

    def probability(self, state) -> float:
        return float(self.probabilities[self.states.index(tuple(state))])

    def by_x(self) -> np.ndarray:
        """Two-channel convenience: probabilities ordered by x = n_2."""
        if self.spec.d != 2:
            raise ValidationError("by_x is defined for two channels only")
        order = sorted(range(len(self.states)), key=lambda i: self.states[i][1])
        return self.as_array()[order]

    def n_bar(self, channel: int) -> float:
        """Mean occupation fraction of one ground level."""
        n = self.spec.n_emitters
        with gmpy2.context(precision=DEFAULT_STEADY_PRECISION):
            acc = sum(
                (mpfr(s[channel]) * mpfr(p) for s, p in zip(self.states, self.probabilities)),
                start=mpfr(0),
            )
            return float(acc / n)

    def normalization_residual(self) -> float:
        return abs(float(sum(float(p) for p in self.probabilities)) - 1.0)

    def kolmogorov_distance(self, other: "SteadyStateDistribution") -> float:
        """Max CDF distance in the canonical state order."""
        a = np.cumsum(self.as_array())
        b = np.cumsum(other.as_array())
        return float(np.max(np.abs(a - b)))


@dataclass(frozen=True)
class OrderParameterPoint:
    n_emitters: int
    r: float
    n_bar_2: float
    susceptibility: float


def _ground_states_two_channel(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((n - x, x) for x in range(n + 1))


def _lgamma(x: mpfr) -> mpfr:
    return gmpy2.lgamma(x)[0]


def steady_state_two_channel(
    n_emitters: int,
    r,
    precision_bits: int = DEFAULT_STEADY_PRECISION,
    method: str = "auto",
) -> SteadyStateDistribution:
    """Closed-form stationary distribution for two channels.

    ``p_x = (N-x)! x! r^x * G(1+r)/G(N-(x-1)+(x+1)r) * S_x`` where ``S_x``
    sums, over increasing tuples ``1 <= L_1 < ... < L_x <= N``, products of
    Gamma ratios ``G(L_j+(j+1)r-(j-1)) / G(L_j+jr-(j-2))``.  Layer j of the
    DP needs one Gamma ratio seed; neighbouring ratios follow from the
    functional equation, so the whole distribution costs O(N^2) flops.

    ``method``: "exact" runs the DP in configurable-precision arithmetic;
    "float" runs it vectorized in float64 log domain (every summand is
    positive, so ~1e-12 relative accuracy; the only viable choice for N in
    the thousands).  "auto" switches to "float" above N = 2000.
    """
    n = int(n_emitters)
    if n < 1:
        raise ValidationError("n_emitters must be >= 1")
    r = as_rate(r)
    if r <= 0:
        raise ValidationError("rate ratio r must be positive")
    if method not in ("auto", "exact", "float"):
        raise ValidationError("method must be auto, exact or float")
    if method == "float" or (method == "auto" and n > 2000):
        return _steady_two_channel_float(n, r)
    spec = SystemSpec(n, (Fraction(1), r))
    with gmpy2.context(precision=precision_bits):
        rr = mpfr(mpq(r))
        one = mpfr(1)
        # nested[x] = sum over the layer-x DP values
        nested = [mpfr(0)] * (n + 1)
        nested[0] = one
        prev = [mpfr(0)] * (n + 1)  # prev[l] holds G_{j-1}(l)
        for j in range(1, n + 1):
            cur = [mpfr(0)] * (n + 1)
            # seed f_j at l = j:  z = l + j(r-1) + 2
            z = mpfr(j) + j * (rr - 1) + 2
            f = gmpy2.exp(_lgamma(z + rr - 1) - _lgamma(z))
            # prefix = sum of G_{j-1} over 1..l-1 (the empty layer counts as 1)
            prefix = sum(prev[:j], start=mpfr(0))
            total = mpfr(0)
            for ell in range(j, n + 1):
                if ell > j:
                    prefix += prev[ell - 1]
                cur[ell] = f if j == 1 else f * prefix
                total += cur[ell]
                f = f * (z + rr - 1) / z
                z = z + 1
            nested[j] = total
            prev = cur
        probs = []
        lg_1r = _lgamma(1 + rr)
        ln_r = gmpy2.log(rr)
        for x in range(n + 1):
            arg = mpfr(n - (x - 1)) + (x + 1) * rr
            logpref = (
                _lgamma(mpfr(n - x + 1))
                + _lgamma(mpfr(x + 1))
                + x * ln_r
                + lg_1r
                - _lgamma(arg)
            )
            probs.append(gmpy2.exp(logpref) * nested[x])
    return SteadyStateDistribution(
        spec=spec, states=_ground_states_two_channel(n), probabilities=tuple(probs)
    )


def _steady_two_channel_float(n: int, r: Fraction) -> SteadyStateDistribution:
    """Float64 log-domain version of the nested-sum DP (vectorized)."""
    from scipy.special import gammaln, logsumexp

    rf = float(r)
    # log f_j along l = j..n via cumulative log-ratios from the layer seed
    nested_log = np.full(n + 1, -np.inf)
    nested_log[0] = 0.0
    prev = np.full(n + 2, -np.inf)  # prev[l] = log G_{j-1}(l), l = 0..n
    for j in range(1, n + 1):
        ell = np.arange(j, n + 1, dtype=float)
        z = ell + j * (rf - 1.0) + 2.0
        seed = gammaln(z[0] + rf - 1.0) - gammaln(z[0])
        logf = np.empty(len(ell))
        logf[0] = seed
        if len(ell) > 1:
            logf[1:] = seed + np.cumsum(np.log((z[:-1] + rf - 1.0) / z[:-1]))
        if j == 1:
            cur_vals = logf
        else:
            # prefix[l-1] = log sum of G_{j-1} over 1..l-1
            prefix = np.logaddexp.accumulate(prev[1 : n + 1])
            cur_vals = logf + prefix[j - 2 : n - 1]
        nested_log[j] = logsumexp(cur_vals)
        prev = np.full(n + 2, -np.inf)
        prev[j : n + 1] = cur_vals
    x = np.arange(n + 1, dtype=float)
    logpref = (
        gammaln(n - x + 1.0)
        + gammaln(x + 1.0)
        + x * np.log(rf)
        + gammaln(1.0 + rf)
        - gammaln(n - (x - 1.0) + (x + 1.0) * rf)
    )
    logp = logpref + nested_log
    logp -= logsumexp(logp)
    probs = np.exp(logp)
    spec = SystemSpec(n, (Fraction(1), r))
    return SteadyStateDistribution(
        spec=spec, states=_ground_states_two_channel(n), probabilities=tuple(probs)
    )


def nested_sum_by_enumeration(n_emitters: int, r, x: int, precision_bits: int = DEFAULT_STEADY_PRECISION):
    """Brute-force nested sum over increasing tuples (test oracle, small N)."""
    from itertools import combinations

    n = int(n_emitters)
    r = as_rate(r)
    with gmpy2.context(precision=precision_bits):
        rr = mpfr(mpq(r))
        total = mpfr(0)
        for tup in combinations(range(1, n + 1), x):
            prod = mpfr(1)
            for j, ell in enumerate(tup, start=1):
                num = mpfr(ell) + (j + 1) * rr - (j - 1)
                den = mpfr(ell) + j * rr - (j - 2)
                prod *= gmpy2.exp(_lgamma(num) - _lgamma(den))
            total += prod
        return total


def steady_state_general(
    spec: SystemSpec,
    precision_bits: int | None = None,
    lattice_cap: int | None = None,
) -> SteadyStateDistribution:
    """Stationary distribution for any d from the closed-form dynamics.

    Only ground states have zero decay rate, so each stationary weight is
    the (power 0, rate 0) coefficient of that state's population.
    """
    from .trajectory import DEFAULT_LATTICE_CAP, solve_multichannel

    n, d = spec.n_emitters, spec.d
    if d == 1:
        return SteadyStateDistribution(
            spec=spec, states=((n,),), probabilities=(mpfr(1),)
        )
    table = solve_multichannel(
        spec,
        precision_bits=precision_bits,
        lattice_cap=lattice_cap or DEFAULT_LATTICE_CAP,
    )
    consts = table.ground_constants()
    states = tuple(sorted(consts))
    return SteadyStateDistribution(
        spec=spec, states=states, probabilities=tuple(consts[s] for s in states)
    )


def order_parameter(
    n_emitters: int,
    r,
    precision_bits: int = DEFAULT_STEADY_PRECISION,
    dr_fraction: Fraction = Fraction(1, 10_000),
) -> OrderParameterPoint:
    """Order parameter ``n_bar_2 = (1/N) sum_x x p_x`` and its r-derivative.

    The susceptibility is a central difference with step ``dr_fraction * r``
    (kept rational so the distribution calls stay exact in r).
    """
    r = as_rate(r)
    n_bar = steady_state_two_channel(n_emitters, r, precision_bits).n_bar(1)
    delta = r * dr_fraction
    hi = steady_state_two_channel(n_emitters, r + delta, precision_bits).n_bar(1)
    lo = steady_state_two_channel(n_emitters, r - delta, precision_bits).n_bar(1)
    chi = (hi - lo) / (2 * float(delta))
    return OrderParameterPoint(
        n_emitters=int(n_emitters), r=float(r), n_bar_2=n_bar, susceptibility=chi
    )


def independent_decay_fraction(r) -> float:
    """Comparison curve for N independent emitters: n_bar_2 = r/(1+r)."""
    r = float(r)
    return r / (1.0 + r)
