"""System definition and occupation-lattice bookkeeping.

A system is N identical emitters with one excited level and d ground
levels; channel alpha decays collectively at rate Gamma_alpha.  States of
the permutation-symmetric subspace are labelled by the ground-level
occupation vector ``(n_1, ..., n_d)``; the number of remaining
excitations is ``m = N - sum(n)``.  All rates are exact rationals in a
common unit so degenerate decay rates are detected exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .errors import ValidationError
from .expsum import as_rate

__all__ = [
    "SystemSpec",
    "OccupationState",
    "decay_rate",
    "compositions",
    "lattice_states",
    "lattice_size",
]


@dataclass(frozen=True)
class SystemSpec:
    """Emitter count and the exact collective decay rate of each channel."""

    n_emitters: int
    channels: tuple[Fraction, ...]

    def __init__(self, n_emitters: int, channels: Sequence):
        if int(n_emitters) != n_emitters or n_emitters < 1:
            raise ValidationError("n_emitters must be a positive integer")
        rates = tuple(as_rate(c) for c in channels)
        if not rates:
            raise ValidationError("at least one decay channel is required")
        if any(g <= 0 for g in rates):
            raise ValidationError("every channel rate must be strictly positive")
        object.__setattr__(self, "n_emitters", int(n_emitters))
        object.__setattr__(self, "channels", rates)

    @property
    def d(self) -> int:
        return len(self.channels)

    @property
    def total_rate(self) -> Fraction:
        return sum(self.channels, Fraction(0))

    @property
    def is_balanced(self) -> bool:
        return all(g == self.channels[0] for g in self.channels)

    def channels_float(self) -> np.ndarray:
        return np.array([float(g) for g in self.channels], dtype=float)

    def permuted(self, order: Sequence[int]) -> "SystemSpec":
        """Same system with channels relabelled by ``order``."""
        return SystemSpec(self.n_emitters, tuple(self.channels[i] for i in order))


def decay_rate(spec: SystemSpec, occupations: Sequence[int]) -> Fraction:
    """Total decay rate out of a lattice state, m * sum_a Gamma_a (n_a + 1).

    Zero exactly when no excitations remain.
    """
    m = spec.n_emitters - sum(occupations)
    if m == 0:
        return Fraction(0)
    return m * sum((g * (n + 1) for g, n in zip(spec.channels, occupations)), Fraction(0))


@dataclass(frozen=True)
class OccupationState:
    """A ground-level occupation vector tied to its system."""

    occupations: tuple[int, ...]
    system: SystemSpec

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        object.__setattr__(self, "occupations", occ)
        if len(occ) != self.system.d:
            raise ValidationError("occupation vector length must equal channel count")
        if any(n < 0 for n in occ):
            raise ValidationError("occupations must be non-negative")
        if sum(occ) > self.system.n_emitters:
            raise ValidationError("occupations cannot exceed the emitter count")

    @property
    def m(self) -> int:
        """Remaining excitations."""
        return self.system.n_emitters - sum(self.occupations)

    @property
    def decay_rate(self) -> Fraction:
        return decay_rate(self.system, self.occupations)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All vectors of ``parts`` non-negative ints summing to ``total``,
    in lexicographic order (the canonical state order within a level)."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def lattice_states(spec: SystemSpec) -> list[tuple[int, ...]]:
    """Canonical ordering of the whole lattice: by level q = sum(n), then
    lexicographic.  Shared by the closed-form solver, the ODE oracle and
    all file outputs so columns always line up."""
    out = []
    for q in range(spec.n_emitters + 1):
        out.extend(compositions(q, spec.d))
    return out


def lattice_size(n_emitters: int, d: int) -> int:
    return comb(n_emitters + d, d)
