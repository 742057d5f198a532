"""Exact algebra for finite sums of ``c * t**k * exp(-rate * t)`` terms.

Every closed-form observable produced by the solvers (populations,
intensities, their derivatives) lives in this representation: a finite
list of terms with a high-precision real coefficient, a non-negative
integer power of t, and an exact rational decay rate.  Rates are exact
so that degenerate convolutions (equal rates) are detected by exact
equality instead of a floating tolerance; coefficients are MPFR floats
of configurable precision because the combinatorial prefactors of the
solvers grow factorially and cancel massively when summed.

Convolution here always means the causal convolution
``(f * g)(t) = integral_0^t f(t - u) g(u) du``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, NamedTuple, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import DivergentIntegral, PrecisionExhausted, ValidationError

__all__ = [
    "DEFAULT_PRECISION_BITS",
    "ExpPolySum",
    "ExpTerm",
    "as_rate",
    "default_precision_bits",
]

#: Working precision used when the caller does not request one.
DEFAULT_PRECISION_BITS = 128

#: Guard bits added to every internal computation before rounding back.
_GUARD_BITS = 32

SCHEMA_VERSION = 1


def as_rate(value) -> Fraction:
    """Coerce a rate to an exact rational.

    Integers, Fractions and decimal strings convert with their exact
    decimal meaning (``"0.2"`` becomes 1/5); floats convert via their
    exact binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (str, float)):
        return Fraction(value)
    raise ValidationError(f"cannot interpret {value!r} as an exact rate")


def default_precision_bits(n_emitters: int) -> int:
    """Coefficient precision used by the solvers for a given system size.

    The partial-fraction coefficients of an N-emitter cascade reach about
    2.3*N bits (measured up to N=200, mildly worse for many balanced
    channels), they cancel almost completely when summed, and term pruning
    cuts at precision/2 relative magnitude.  7*N bits keeps the prune
    threshold and the rounding noise comfortably below everything that
    matters; below N=20 the cascades are benign and 128 bits suffice.
    """
    if n_emitters <= 20:
        return 128
    return max(256, 7 * n_emitters)


def _ctx(bits: int):
    return gmpy2.context(precision=bits + _GUARD_BITS)


def _to_mpfr(value) -> mpfr:
    """Convert ints, Fractions, floats, strings and mpfrs exactly-ish."""
    if isinstance(value, Fraction):
        return mpfr(mpq(value))
    return mpfr(value)


class ExpTerm(NamedTuple):
    """A single ``coeff * t**power * exp(-rate*t)`` term."""

    coeff: "mpfr"
    power: int
    rate: Fraction


def _compensated_sum(values: Sequence[mpfr]) -> mpfr:
    """Neumaier-compensated sum, smallest magnitudes first."""
    total = mpfr(0)
    comp = mpfr(0)
    for v in sorted(values, key=abs):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


class ExpPolySum:
    """Immutable finite sum of ``coeff * t**power * exp(-rate*t)`` terms.

    Terms with identical ``(power, rate)`` are merged on construction and
    negligible terms (relative magnitude below ``2**(-precision_bits/2)``)
    are pruned, with the cumulative relative weight of everything pruned
    exposed as :attr:`dropped_budget`.
    """

    __slots__ = ("_terms", "_precision_bits", "_dropped")

    def __init__(
        self,
        terms: Iterable[tuple] = (),
        precision_bits: int = DEFAULT_PRECISION_BITS,
        _dropped: float = 0.0,
    ):
        if precision_bits < 8:
            raise ValidationError("precision_bits must be at least 8")
        self._precision_bits = int(precision_bits)
        merged: dict[tuple[int, Fraction], mpfr] = {}
        with _ctx(self._precision_bits):
            for coeff, power, rate in terms:
                power = int(power)
                if power < 0:
                    raise ValidationError("term powers must be non-negative")
                rate = as_rate(rate)
                if rate < 0:
                    raise ValidationError("term rates must be non-negative")
                key = (power, rate)
                c = _to_mpfr(coeff)
                if key in merged:
                    merged[key] = merged[key] + c
                else:
                    merged[key] = c
        dropped = _dropped
        if merged:
            biggest = max(abs(c) for c in merged.values())
            if biggest > 0:
                cutoff = biggest * mpfr(2) ** (-(self._precision_bits // 2))
                kept = {}
                for key, c in merged.items():
                    if c != 0 and abs(c) < cutoff:
                        dropped += float(abs(c) / biggest)
                    elif c != 0:
                        kept[key] = c
                merged = kept
            else:
                merged = {}
        # storage is exactly precision_bits; guard bits live only inside ops
        self._terms = tuple(
            ExpTerm(mpfr(c, self._precision_bits), p, r)
            for (p, r), c in sorted(merged.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        )
        self._dropped = dropped

    # -- constructors -------------------------------------------------

    @classmethod
    def exponential(cls, rate, coeff=1, power: int = 0, precision_bits: int = DEFAULT_PRECISION_BITS) -> "ExpPolySum":
        """The single term ``coeff * t**power * exp(-rate*t)``."""
        return cls([(coeff, power, as_rate(rate))], precision_bits)

    @classmethod
    def zero(cls, precision_bits: int = DEFAULT_PRECISION_BITS) -> "ExpPolySum":
        return cls([], precision_bits)

    # -- basic accessors ----------------------------------------------

    @property
    def terms(self) -> tuple[ExpTerm, ...]:
        return self._terms

    @property
    def precision_bits(self) -> int:
        return self._precision_bits

    @property
    def dropped_budget(self) -> float:
        """Cumulative relative weight of pruned terms along the history."""
        return self._dropped

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        bits = ", ".join(f"{float(c):.6g}*t^{p}*e^(-{r}t)" for c, p, r in self._terms[:4])
        more = "" if len(self._terms) <= 4 else f", ... ({len(self._terms)} terms)"
        return f"ExpPolySum({bits}{more})"

    # -- algebra -------------------------------------------------------

    def __add__(self, other: "ExpPolySum") -> "ExpPolySum":
        if not isinstance(other, ExpPolySum):
            return NotImplemented
        bits = max(self._precision_bits, other._precision_bits)
        return ExpPolySum(
            list(self._terms) + list(other._terms),
            bits,
            _dropped=self._dropped + other._dropped,
        )

    def scaled(self, factor) -> "ExpPolySum":
        """Multiply every coefficient by an exact or floating factor."""
        with _ctx(self._precision_bits):
            f = _to_mpfr(factor if not isinstance(factor, Fraction) else mpq(factor))
            new = [(c * f, p, r) for c, p, r in self._terms]
        return ExpPolySum(new, self._precision_bits, _dropped=self._dropped)

    def convolve(self, other: "ExpPolySum") -> "ExpPolySum":
        """Exact causal convolution with another sum.

        Pairs of terms with distinct rates are expanded through the
        closed partial-fraction form of
        ``L[t^a e^{-Ft}] * L[t^b e^{-Kt}] = a! b! / ((s+F)^{a+1} (s+K)^{b+1})``,
        equal rates through the beta-function identity; both handle
        arbitrary multiplicity, which multichannel rate collisions need.
        """
        if not isinstance(other, ExpPolySum):
            raise ValidationError("convolve expects another ExpPolySum")
        bits = max(self._precision_bits, other._precision_bits)
        out: list[tuple] = []
        with _ctx(bits):
            for c1, a, f_rate in self._terms:
                for c2, b, k_rate in other._terms:
                    cc = c1 * c2
                    if f_rate == k_rate:
                        # (t^a e^{-Ft}) * (t^b e^{-Ft}) = B(a+1, b+1) t^{a+b+1} e^{-Ft}
                        ratio = mpq(factorial(a) * factorial(b), factorial(a + b + 1))
                        out.append((cc * mpfr(ratio), a + b + 1, f_rate))
                        continue
                    diff = k_rate - f_rate
                    fa_fb = factorial(a) * factorial(b)
                    for i in range(a + 1):
                        num = (-1) ** i * comb(b + i, i) * fa_fb
                        rat = Fraction(num, factorial(a - i)) / diff ** (b + 1 + i)
                        out.append((cc * mpfr(mpq(rat)), a - i, f_rate))
                    for j in range(b + 1):
                        num = (-1) ** j * comb(a + j, j) * fa_fb
                        rat = Fraction(num, factorial(b - j)) / (-diff) ** (a + 1 + j)
                        out.append((cc * mpfr(mpq(rat)), b - j, k_rate))
        return ExpPolySum(out, bits, _dropped=self._dropped + other._dropped)

    def derivative(self) -> "ExpPolySum":
        """Term-wise d/dt."""
        new: list[tuple] = []
        with _ctx(self._precision_bits):
            for c, p, r in self._terms:
                if p >= 1:
                    new.append((c * p, p - 1, r))
                if r != 0:
                    new.append((-c * mpfr(mpq(r)), p, r))
        return ExpPolySum(new, self._precision_bits, _dropped=self._dropped)

    def integral_to_infinity(self) -> mpfr:
        """``integral_0^inf`` of the sum; exact per term: c * k! / rate^{k+1}."""
        vals = []
        with _ctx(self._precision_bits):
            for c, p, r in self._terms:
                if r == 0:
                    if c != 0:
                        raise DivergentIntegral(
                            "term with zero rate and non-zero coefficient diverges"
                        )
                    continue
                vals.append(c * mpfr(mpq(Fraction(factorial(p)) / r ** (p + 1))))
            total = _compensated_sum(vals)
        return mpfr(total, self._precision_bits)

    # -- evaluation ----------------------------------------------------

    def _term_values(self, t) -> list[mpfr]:
        tv = _to_mpfr(t)
        vals = []
        for c, p, r in self._terms:
            v = c * gmpy2.exp(-_to_mpfr(r) * tv)
            if p:
                v = v * tv**p
            vals.append(v)
        return vals

    def evaluate(self, t) -> mpfr:
        """Value at ``t >= 0``; compensated, largest magnitudes added last."""
        if t < 0:
            raise ValidationError("evaluation time must be non-negative")
        with _ctx(self._precision_bits):
            total = _compensated_sum(self._term_values(t))
        return mpfr(total, self._precision_bits)

    __call__ = evaluate

    def evaluate_grid(self, ts) -> "np.ndarray":
        """Float64 values on an array of times (convenience for plots/CSV)."""
        import numpy as np

        return np.array([float(self.evaluate(t)) for t in ts], dtype=float)

    def cancellation_bits(self, t) -> float:
        """Bits lost to cancellation at ``t``: log2(sum|terms| / |value|)."""
        with _ctx(self._precision_bits):
            vals = self._term_values(t)
            gross = sum(abs(v) for v in vals)
            net = abs(_compensated_sum(vals))
            if gross == 0:
                return 0.0
            if net == 0:
                return float(self._precision_bits)
            return max(0.0, float(gmpy2.log2(gross / net)))

    def require_accuracy(self, t, needed_bits: int = 30) -> None:
        """Raise :class:`PrecisionExhausted` if fewer than ``needed_bits``
        significant bits survive cancellation at ``t``."""
        lost = self.cancellation_bits(t)
        if self._precision_bits - lost < needed_bits:
            raise PrecisionExhausted(
                f"only {self._precision_bits - lost:.0f} significant bits left at t={t} "
                f"(precision_bits={self._precision_bits}); increase precision_bits"
            )

    @property
    def constant_term(self) -> mpfr:
        """Coefficient of the (power=0, rate=0) term, i.e. the t->inf limit."""
        for c, p, r in self._terms:
            if p == 0 and r == 0:
                return c
        return mpfr(0)

    def max_rate(self) -> Fraction:
        return max((r for _, _, r in self._terms), default=Fraction(0))

    def min_positive_rate(self) -> Fraction:
        rates = [r for _, _, r in self._terms if r > 0]
        return min(rates) if rates else Fraction(0)

    # -- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        digits = int(self._precision_bits * 0.30103) + 3
        return {
            "schema_version": SCHEMA_VERSION,
            "precision_bits": self._precision_bits,
            "terms": [
                {
                    "coeff": _mpfr_to_decimal(c, digits),
                    "power": p,
                    "rate_num": r.numerator,
                    "rate_den": r.denominator,
                }
                for c, p, r in self._terms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExpPolySum":
        bits = int(doc["precision_bits"])
        with _ctx(bits):
            terms = [
                (mpfr(t["coeff"]), int(t["power"]), Fraction(int(t["rate_num"]), int(t["rate_den"])))
                for t in doc["terms"]
            ]
        return cls(terms, bits)

    @classmethod
    def from_json(cls, text: str) -> "ExpPolySum":
        return cls.from_json_dict(json.loads(text))


def _mpfr_to_decimal(x: mpfr, digits: int) -> str:
    """Scientific-notation decimal string with enough digits to round-trip."""
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "-inf" if x < 0 else "inf"
    if x == 0:
        return "0"
    mantissa, exp, _ = x.digits(10, digits)
    sign = ""
    if mantissa.startswith("-"):
        sign, mantissa = "-", mantissa[1:]
    return f"{sign}{mantissa[0]}.{mantissa[1:]}e{exp - 1}"
