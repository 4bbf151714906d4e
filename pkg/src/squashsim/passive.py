"""Passive basis selection: multi-basis POVM and the basis-choice identity.

A beamsplitter routes each incoming photon to one of B basis analyzers
with equal probability.  When several analyzers register photons, the
receiver picks one of the firing bases uniformly at random.  The chosen
basis then occurs with probability exactly 1/B for any photon number,
so the basis statistics match those of a single squashed photon; bit
values within the chosen basis are handled by the usual interval bounds.

All identity checks here run in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .detection import QubitPovm
from .errors import ValidationError

_ORTHONORMAL_TOL = 1e-12


@dataclass(frozen=True)
class PassiveConfig:
    """B >= 2 orthonormal qubit basis pairs sharing the beamsplit weight 1/B."""

    bases: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if len(self.bases) < 2:
            raise ValidationError("passive selection needs at least two bases")
        for i, (k0, k1) in enumerate(self.bases):
            gram = np.array(
                [
                    [np.vdot(k0, k0), np.vdot(k0, k1)],
                    [np.vdot(k1, k0), np.vdot(k1, k1)],
                ]
            )
            if np.abs(gram - np.eye(2)).max() > _ORTHONORMAL_TOL:
                raise ValidationError(f"basis {i} is not orthonormal")

    @property
    def num_bases(self) -> int:
        return len(self.bases)

    @classmethod
    def from_kets(cls, basis_kets: Sequence[tuple[Sequence[complex], Sequence[complex]]]) -> "PassiveConfig":
        return cls(
            tuple(
                (np.asarray(k0, dtype=complex), np.asarray(k1, dtype=complex))
                for k0, k1 in basis_kets
            )
        )


def passive_povm(config: PassiveConfig) -> QubitPovm:
    """Single 2B-element POVM of the whole passive setup: projectors scaled by 1/B."""
    b = config.num_bases
    elements = []
    for k0, k1 in config.bases:
        elements.append(np.outer(k0, k0.conj()) / b)
        elements.append(np.outer(k1, k1.conj()) / b)
    return QubitPovm(elements)


def multi_basis_detection_prob(num_bases: int, n: int, b: int) -> Fraction:
    """Probability that exactly a fixed set of b analyzers (one being the target) all fire.

    Each of n photons lands in one of ``num_bases`` analyzers uniformly.
    (b/B)^n counts all photons inside the fixed set; subtracting the events
    confined to proper subsets leaves every analyzer of the set firing.
    Uniform routing makes the value independent of which set is fixed.
    """
    if not 1 <= b <= num_bases:
        raise ValidationError(f"need 1 <= b <= {num_bases}, got {b}")
    if n < 1:
        raise ValidationError("need at least one photon")
    probs: list[Fraction] = []
    for size in range(1, b + 1):
        p = Fraction(size, num_bases) ** n
        for c in range(1, size):
            p -= comb(size, size - c) * probs[size - c - 1]
        probs.append(p)
    return probs[b - 1]


def basis_choice_probability(num_bases: int, n: int) -> Fraction:
    """Probability that the uniform pick-one-firing-basis rule selects a given basis.

    Sums over the number b of firing bases containing the target, weighted by
    the 1/b pick probability and the count of ways to choose the other b-1
    firing bases.  Equals 1/num_bases identically.
    """
    total = Fraction(0)
    for b in range(1, num_bases + 1):
        total += (
            Fraction(1, b)
            * comb(num_bases - 1, b - 1)
            * multi_basis_detection_prob(num_bases, n, b)
        )
    return total


def sample_basis_choice_frequency(
    num_bases: int, n: int, samples: int, seed: int, chunk: int = 1 << 16
) -> float:
    """Monte Carlo frequency of the target basis under the selection rule.

    Each photon independently picks an analyzer; the trial's basis is chosen
    uniformly among the firing analyzers.  Cross-validates the exact recursion.
    """
    if samples < 1:
        raise ValidationError("need at least one sample")
    rng = np.random.Generator(np.random.Philox(key=seed))
    hits = 0
    remaining = samples
    while remaining > 0:
        batch = min(chunk, remaining)
        draws = rng.integers(0, num_bases, size=(batch, n))
        fired = np.zeros((batch, num_bases), dtype=bool)
        rows = np.repeat(np.arange(batch), n)
        fired[rows, draws.ravel()] = True
        n_fired = fired.sum(axis=1)
        # Selecting uniformly among firing bases hits basis 0 with prob fired0/n_fired.
        u = rng.random(batch)
        hits += int((u * n_fired < fired[:, 0]).sum())
        remaining -= batch
    return hits / samples
