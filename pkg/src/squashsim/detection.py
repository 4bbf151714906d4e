"""Exact outcome statistics for multi-photon detection setups.

Covers the full photon-number-resolving count distribution, the
squash-then-measure statistics, the count-proportional classical
post-processing statistics, and the two-threshold-detector event
statistics (single clicks per side plus double clicks).  Everything here
is computed analytically; sampling lives in the montecarlo module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, UnsupportedConfigurationError, ValidationError
from .symstate import SymmetricPhotonState, squash

POVM_TOL = 1e-10
PROBABILITY_SUM_TOL = 1e-10
PROBABILITY_FLOOR = -1e-12
MAX_COUNT_VECTORS = 10**6

BIT0, BIT1, DOUBLE_CLICK = "bit0", "bit1", "double"


class QubitPovm:
    """Positive-operator-valued measurement on one qubit."""

    __slots__ = ("elements",)

    def __init__(self, elements: Sequence[np.ndarray]):
        mats = tuple(np.asarray(m, dtype=complex) for m in elements)
        if len(mats) < 2:
            raise ValidationError("POVM needs at least two elements")
        total = np.zeros((2, 2), dtype=complex)
        for i, m in enumerate(mats):
            if m.shape != (2, 2):
                raise ValidationError(f"element {i}: expected 2x2, got {m.shape}")
            if np.abs(m - m.conj().T).max() > POVM_TOL:
                raise ValidationError(f"element {i}: not Hermitian")
            if np.linalg.eigvalsh(m).min() < -POVM_TOL:
                raise ValidationError(f"element {i}: not positive semidefinite")
            total += m
        if np.abs(total - np.eye(2)).max() > POVM_TOL:
            raise ValidationError("POVM elements do not sum to the identity")
        self.elements = mats

    @classmethod
    def _unchecked(cls, elements: Sequence[np.ndarray]) -> "QubitPovm":
        """Bypass validation; only for injecting negative controls in tests/CLI."""
        povm = object.__new__(cls)
        object.__setattr__(povm, "elements", tuple(np.asarray(m, dtype=complex) for m in elements))
        return povm

    @classmethod
    def projective(cls, basis_kets: Sequence[Sequence[complex]]) -> "QubitPovm":
        kets = [np.asarray(k, dtype=complex) for k in basis_kets]
        return cls([np.outer(k, k.conj()) for k in kets])

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class PnrDistribution:
    """Probability of each click-count vector (n_1, ..., n_m), sum n_i = n."""

    n: int
    m: int
    probs: dict[tuple[int, ...], float]

    def __post_init__(self):
        total = 0.0
        for counts, p in self.probs.items():
            if len(counts) != self.m or sum(counts) != self.n:
                raise ValidationError(f"bad count vector {counts}")
            if p < PROBABILITY_FLOOR:
                raise ValidationError(f"negative probability {p} for {counts}")
            total += p
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total}")

    def items(self) -> Iterator[tuple[tuple[int, ...], float]]:
        return iter(self.probs.items())

    def __getitem__(self, counts: tuple[int, ...]) -> float:
        return self.probs.get(counts, 0.0)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities over a finite outcome label set."""

    probs: dict

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total}")

    def __getitem__(self, label) -> float:
        return self.probs.get(label, 0.0)

    def as_array(self, labels: Sequence) -> np.ndarray:
        return np.array([self.probs.get(lb, 0.0) for lb in labels])


def compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """All ordered m-tuples of nonnegative integers summing to n."""
    if m == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, m - 1):
            yield (first,) + rest


def multinomial(n: int, counts: Sequence[int]) -> int:
    out, remaining = 1, n
    for c in counts:
        out *= math.comb(remaining, c)
        remaining -= c
    return out


def _add_photon(block: np.ndarray, element: np.ndarray, t: int) -> np.ndarray:
    """Matrix elements of M x (previous t-photon operator) between (t+1)-photon Dicke states.

    Splitting off one photon, |Dicke_j of t+1> decomposes with amplitudes
    sqrt((t+1-j)/(t+1)) on the H branch and sqrt(j/(t+1)) on the V branch.
    """
    dim = t + 2
    j = np.arange(dim)
    c0 = np.sqrt((t + 1 - j) / (t + 1))  # H component amplitude
    c1 = np.sqrt(j / (t + 1))            # V component amplitude
    out = np.zeros((dim, dim), dtype=complex)
    # One guard row/column of zeros at the end absorbs both out-of-range index
    # patterns below: j - a == -1 wraps to the last (zero) row, j - a == t + 1
    # lands on the first unfilled one.
    padded = np.zeros((dim + 1, dim + 1), dtype=complex)
    padded[:t + 1, :t + 1] = block
    for a in (0, 1):
        ca = c0 if a == 0 else c1
        for b in (0, 1):
            cb = c0 if b == 0 else c1
            out += element[a, b] * np.outer(ca, cb) * padded[j[:, None] - a, j[None, :] - b]
    return out


def _operator_blocks(povm: QubitPovm, n: int) -> dict[tuple[int, ...], np.ndarray]:
    """Symmetric-subspace matrix of the tensor product with given element multiplicities.

    Keyed by count vector; bosonic symmetry makes the value independent of the
    tensor-factor ordering, so one representative ordering suffices.
    """
    m = len(povm)
    blocks: dict[tuple[int, ...], np.ndarray] = {(0,) * m: np.array([[1.0 + 0j]])}
    for t in range(n):
        new: dict[tuple[int, ...], np.ndarray] = {}
        for counts in compositions(t + 1, m):
            i = next(idx for idx, c in enumerate(counts) if c > 0)
            prev = tuple(c - (idx == i) for idx, c in enumerate(counts))
            new[counts] = _add_photon(blocks[prev], povm.elements[i], t)
        blocks = new
    return blocks


def pnr_distribution(state: SymmetricPhotonState, povm: QubitPovm) -> PnrDistribution:
    """Exact count-vector law for photon-number-resolving detectors.

    The probability of counts (n_1, ..., n_m) is the multinomial coefficient
    times the collapse probability of any one detection ordering with those
    multiplicities.
    """
    n, m = state.n, len(povm)
    n_vectors = math.comb(n + m - 1, m - 1)
    if n_vectors > MAX_COUNT_VECTORS:
        raise CapacityError(f"{n_vectors} count vectors exceeds guard {MAX_COUNT_VECTORS}")
    blocks = _operator_blocks(povm, n)
    probs = {}
    for counts, block in blocks.items():
        lam = np.trace(block @ state.dm)
        probs[counts] = multinomial(n, counts) * lam.real
    return PnrDistribution(n=n, m=m, probs=probs)


def situation1_distribution(state: SymmetricPhotonState, povm: QubitPovm) -> OutcomeDistribution:
    """Outcome law of squash-to-one-photon followed by a single-qubit measurement."""
    rho = squash(state).dm
    return OutcomeDistribution(
        {i: np.trace(m @ rho).real for i, m in enumerate(povm.elements)}
    )


def situation2_distribution(state: SymmetricPhotonState, povm: QubitPovm) -> OutcomeDistribution:
    """Outcome law of PNR detection with count-proportional post-processing.

    Outcome i is announced with probability n_i / n given counts (n_1,...,n_m);
    computed exactly from the full count distribution, no sampling.
    """
    n = state.n
    dist = pnr_distribution(state, povm)
    probs = {i: 0.0 for i in range(len(povm))}
    for counts, p in dist.items():
        for i, c in enumerate(counts):
            if c:
                probs[i] += p * c / n
    return OutcomeDistribution(probs)


def situation4_distribution(state: SymmetricPhotonState, povm: QubitPovm) -> OutcomeDistribution:
    """Threshold-detector event law for a two-detector setup.

    Bit i is announced when only detector i clicks, i.e. all n photons collapse
    on side i; anything else is a double click.  Statistically identical to the
    physical two-threshold-detector arrangement.
    """
    if len(povm) != 2:
        raise UnsupportedConfigurationError("threshold event set defined for exactly 2 detectors")
    dist = pnr_distribution(state, povm)
    n = state.n
    p0 = dist[(n, 0)]
    p1 = dist[(0, n)]
    return OutcomeDistribution({BIT0: p0, BIT1: p1, DOUBLE_CLICK: 1.0 - p0 - p1})


@dataclass(frozen=True)
class EquivalenceReport:
    """Comparison of squash-based and post-processing-based outcome laws."""

    p_squash: np.ndarray
    p_postprocessed: np.ndarray
    max_abs_diff: float
    tol: float
    passed: bool


def verify_theorem1(state: SymmetricPhotonState, povm: QubitPovm, tol: float) -> EquivalenceReport:
    """Check that squash-then-measure and measure-then-postprocess statistics agree."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    labels = list(range(len(povm)))
    p_sq = situation1_distribution(state, povm).as_array(labels)
    p_cp = situation2_distribution(state, povm).as_array(labels)
    diff = float(np.abs(p_sq - p_cp).max())
    return EquivalenceReport(
        p_squash=p_sq, p_postprocessed=p_cp, max_abs_diff=diff, tol=tol, passed=diff <= tol
    )


def random_povm(m: int, rng: np.random.Generator) -> QubitPovm:
    """Random m-element POVM: Ginibre-positive parts normalized by the inverse sqrt of their sum."""
    parts = []
    for _ in range(m):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        parts.append(g @ g.conj().T)
    total = sum(parts)
    evals, evecs = np.linalg.eigh(total)
    inv_sqrt = evecs @ np.diag(evals**-0.5) @ evecs.conj().T
    return QubitPovm([inv_sqrt @ p @ inv_sqrt for p in parts])
