"""Exponential-sum algebra against quadrature and calculus oracles."""

import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from multidicke import DivergentIntegral, ExpPolySum, PrecisionExhausted, ValidationError, as_rate

E = ExpPolySum.exponential


def conv_quadrature(f, g, t):
    """Independent oracle: adaptive quadrature of int_0^t f(t-u) g(u) du."""
    if t == 0:
        return 0.0
    val, err = quad(lambda u: f(t - u) * g(u), 0.0, t, limit=200)
    assert err < 1e-11
    return val


def term_fn(coeff, power, rate):
    return lambda t: coeff * t**power * math.exp(-rate * t)


class TestConvolve:
    def test_equal_rate_rule(self):
        # e^{-2t} * e^{-2t} = t e^{-2t}
        s = E(2).convolve(E(2))
        assert len(s) == 1
        (term,) = s.terms
        assert term.power == 1 and term.rate == 2 and term.coeff == 1

    def test_distinct_rate_rule(self):
        # e^{-t} * e^{-3t} = (e^{-t} - e^{-3t})/2
        s = E(1).convolve(E(3))
        terms = {(t.power, t.rate): float(t.coeff) for t in s.terms}
        assert terms == {(0, Fraction(1)): 0.5, (0, Fraction(3)): -0.5}

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
    def test_degenerate_rule_against_quadrature(self, t):
        # (t e^{-t}) * e^{-2t}; the exact result must equal the defining
        # integral (which pins the sign of the t e^{-Ft}/(K-F) term)
        s = ExpPolySum([(1, 1, 1)]).convolve(E(2))
        ref = conv_quadrature(term_fn(1, 1, 1), term_fn(1, 0, 2), t)
        assert float(s(t)) == pytest.approx(ref, abs=1e-12)

    def test_triple_convolution_frozen(self):
        # (e^{-t} * e^{-2t}) * e^{-3t} at t=1, from nested quadrature
        s = E(1).convolve(E(2)).convolve(E(3))
        inner = lambda x: conv_quadrature(term_fn(1, 0, 1), term_fn(1, 0, 2), x)
        ref = quad(lambda u: inner(1.0 - u) * math.exp(-3 * u), 0.0, 1.0)[0]
        assert float(s(1.0)) == pytest.approx(ref, abs=1e-9)
        assert float(s(1.0)) == pytest.approx(0.07349797153304044, abs=1e-14)

    @pytest.mark.parametrize(
        "a,b",
        [((1, 2, 1), (1, 1, 1)), ((1, 2, 1), (1, 1, 2)), ((1, 3, 2), (1, 2, 5)), ((2.5, 0, 3), (1, 4, 3))],
    )
    def test_high_multiplicity_against_quadrature(self, a, b):
        s = ExpPolySum([a]).convolve(ExpPolySum([b]))
        for t in (0.4, 1.3):
            ref = conv_quadrature(term_fn(*a), term_fn(*b), t)
            assert float(s(t)) == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_beta_identity_equal_rates(self):
        # (t^2 e^{-t}) * (t e^{-t}) = 2!1!/4! t^4 e^{-t}
        s = ExpPolySum([(1, 2, 1)]).convolve(ExpPolySum([(1, 1, 1)]))
        (term,) = s.terms
        assert term.power == 4 and term.rate == 1
        assert float(term.coeff) == pytest.approx(1 / 12, abs=1e-30)


def small_sums(max_terms=3, zero_rates=False):
    rate = st.fractions(min_value=0 if zero_rates else Fraction(1, 4), max_value=6, max_denominator=4)
    coeff = st.floats(min_value=-3, max_value=3, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
    term = st.tuples(coeff, st.integers(0, 2), rate)
    return st.lists(term, min_size=1, max_size=max_terms).map(ExpPolySum)


@settings(max_examples=40, deadline=None)
@given(small_sums(), small_sums(), st.floats(0.05, 4.0))
def test_convolution_commutes(a, b, t):
    va, vb = a.convolve(b)(t), b.convolve(a)(t)
    with gmpy2.context(precision=200):
        assert abs(va - vb) <= 2.0**-90 * (1 + abs(va))


@settings(max_examples=25, deadline=None)
@given(small_sums(2), small_sums(2), small_sums(2), st.floats(0.05, 4.0))
def test_convolution_associates(a, b, c, t):
    conv = a.convolve(b).convolve(c)
    lhs = conv(t)
    rhs = a.convolve(b.convolve(c))(t)
    with gmpy2.context(precision=200):
        # coefficients can sit orders of magnitude above the value; scale
        # the rounding allowance by the largest term
        scale = max(
            [mpfr(1), abs(lhs)] + [abs(term.coeff) for term in conv.terms]
        )
        assert abs(lhs - rhs) <= 2.0**-80 * scale


@settings(max_examples=40, deadline=None)
@given(small_sums(zero_rates=True), small_sums(zero_rates=True))
def test_convolution_vanishes_at_zero(a, b):
    conv = a.convolve(b)
    scale = max(1.0, max((abs(float(t.coeff)) for t in conv.terms), default=1.0))
    assert abs(float(conv(0))) <= 1e-30 * scale


@settings(max_examples=40, deadline=None)
@given(small_sums())
def test_fundamental_theorem(s):
    # int_0^inf s'(t) dt = -s(0) for decaying s
    lhs = s.derivative().integral_to_infinity()
    rhs = s(0)
    with gmpy2.context(precision=200):
        assert abs(lhs + rhs) <= 2.0**-90 * (1 + abs(rhs))


class TestEvaluate:
    def test_at_zero(self):
        assert float(E(2)(0)) == 1.0

    def test_t_exp(self):
        assert float(ExpPolySum([(1, 1, 1)])(1.0)) == pytest.approx(math.exp(-1), abs=1e-16)

    def test_single_channel_population_vs_ode(self):
        # p_1(t) for N=2, one channel, against the rate-equation oracle
        from scipy.integrate import solve_ivp

        from multidicke import SystemSpec, solve_single_channel

        table = solve_single_channel(SystemSpec(2, (1,)))
        p1 = table.population((1,))

        def rhs(_t, y):
            # dp2 = -2 p2; dp1 = 2 p2 - 2 p1; dp0 = 2 p1
            return [-2 * y[0], 2 * y[0] - 2 * y[1], 2 * y[1]]

        sol = solve_ivp(rhs, (0, 0.5), [1.0, 0.0, 0.0], rtol=1e-12, atol=1e-14)
        assert float(p1(0.5)) == pytest.approx(sol.y[1, -1], abs=1e-10)

    def test_negative_time_rejected(self):
        with pytest.raises(ValidationError):
            E(1)(-0.5)


class TestDerivative:
    def test_exponential(self):
        d = E(2).derivative()
        (term,) = d.terms
        assert term.power == 0 and term.rate == 2 and float(term.coeff) == -2

    def test_t_exponential(self):
        d = ExpPolySum([(1, 1, 1)]).derivative()
        terms = {(t.power, t.rate): float(t.coeff) for t in d.terms}
        assert terms == {(0, Fraction(1)): 1.0, (1, Fraction(1)): -1.0}

    def test_matches_finite_difference(self):
        from multidicke import SystemSpec, solve_single_channel

        table = solve_single_channel(SystemSpec(4, (1,)))
        for m in range(5):
            p = table.population((4 - m,))
            d = p.derivative()
            for t in (0.1, 0.6):
                h = 1e-6
                fd = (float(p(t + h)) - float(p(t - h))) / (2 * h)
                assert float(d(t)) == pytest.approx(fd, abs=1e-8)


class TestIntegral:
    def test_exponential(self):
        assert float(E(2).integral_to_infinity()) == 0.5

    def test_t_exponential(self):
        assert float(ExpPolySum([(1, 1, 1)]).integral_to_infinity()) == 1.0

    def test_zero_rate_diverges(self):
        with pytest.raises(DivergentIntegral):
            ExpPolySum([(1.0, 0, 0)]).integral_to_infinity()

    def test_total_emission_counts_every_photon(self):
        # int_0^inf I_tot = N: each emitter releases exactly one photon
        from multidicke import SystemSpec, intensity, solve_multichannel
        from multidicke.rate_ode import integrate as ode_integrate

        spec = SystemSpec(5, (1, 2))
        itot = intensity(solve_multichannel(spec))
        assert float(itot.integral_to_infinity()) == pytest.approx(5.0, rel=1e-6)
        # cross-check against cumulative emission from the ODE oracle
        ts = np.linspace(0, 12.0, 4001)
        pops, states = ode_integrate(spec, ts)
        gammas = spec.channels_float()
        weights = np.array(
            [sum(g * (nx + 1) for g, nx in zip(gammas, s)) * (5 - sum(s)) for s in states]
        )
        emitted = np.trapezoid(pops @ weights, ts)
        assert emitted == pytest.approx(5.0, abs=2e-3)


class TestHousekeeping:
    def test_merge_and_canonical_order(self):
        s = ExpPolySum([(1, 0, 2), (2, 0, 2), (1, 1, 1)])
        assert [(t.power, t.rate) for t in s.terms] == [(1, Fraction(1)), (0, Fraction(2))]
        assert float(s.terms[1].coeff) == 3.0

    def test_prune_budget_surfaced(self):
        s = ExpPolySum([(1.0, 0, 1), (1e-30, 0, 2)], precision_bits=64)
        assert len(s) == 1
        assert s.dropped_budget > 0

    def test_validation(self):
        with pytest.raises(ValidationError):
            ExpPolySum([(1, -1, 1)])
        with pytest.raises(ValidationError):
            ExpPolySum([(1, 0, -2)])
        with pytest.raises(ValidationError):
            ExpPolySum([], precision_bits=4)

    def test_require_accuracy_raises(self):
        # e^{-t} - e^{-2t} ~ t cancels ~40 bits at t = 2^-40
        s = ExpPolySum([(1, 0, 1), (-1, 0, 2)], precision_bits=64)
        with pytest.raises(PrecisionExhausted):
            s.require_accuracy(2.0**-40)
        s.require_accuracy(0.5)  # benign point keeps plenty of bits

    def test_as_rate_exact_decimal(self):
        assert as_rate("0.2") == Fraction(1, 5)
        assert as_rate(Fraction(3, 7)) == Fraction(3, 7)
        assert as_rate(2) == Fraction(2)
        with pytest.raises(ValidationError):
            as_rate(object())

    def test_json_round_trip_exact(self):
        s = ExpPolySum([(1 / 3, 2, Fraction(5, 3)), (-2.25, 0, 7)], precision_bits=160)
        doc = s.to_json()
        back = ExpPolySum.from_json(doc)
        assert len(back) == len(s)
        for a, b in zip(s.terms, back.terms):
            assert a.power == b.power and a.rate == b.rate
            assert a.coeff == b.coeff  # bit-exact through the decimal string

    def test_json_schema_fields(self):
        doc = ExpPolySum([(1, 0, Fraction(1, 3))]).to_json_dict()
        assert doc["schema_version"] == 1
        (term,) = doc["terms"]
        assert set(term) == {"coeff", "power", "rate_num", "rate_den"}
        assert term["rate_num"] == 1 and term["rate_den"] == 3
        assert isinstance(term["coeff"], str)
