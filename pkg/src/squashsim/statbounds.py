"""Interval bounds on channel statistics from single/double-click tallies.

Double-click events carry no bit value, so every observable quantity is
reported as an interval: the pessimistic endpoint counts every double
click against the quantity, the optimistic endpoint counts it in favor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InconsistentStatisticsError, ValidationError
from .paulis import IDENTITY, PAULI

CHSH_QUANTUM_MAX = 2.0 * math.sqrt(2.0)
_CHSH_MAX_SLACK = 1e-9


@dataclass(frozen=True)
class EventTally:
    """Per-basis test-bit counts: correct single clicks, erroneous single clicks, double clicks.

    Counts may be fractional (e.g. exact probabilities used as asymptotic tallies).
    """

    correct_single: float
    error_single: float
    double: float

    def __post_init__(self):
        if min(self.correct_single, self.error_single, self.double) < 0:
            raise ValidationError("tally counts must be nonnegative")

    @property
    def total(self) -> float:
        return self.correct_single + self.error_single + self.double


@dataclass(frozen=True)
class SignedTally:
    """Counts of +1/-1 single-click outcomes and double clicks for one measurement."""

    plus_single: float
    minus_single: float
    double: float

    def __post_init__(self):
        if min(self.plus_single, self.minus_single, self.double) < 0:
            raise ValidationError("tally counts must be nonnegative")

    @property
    def total(self) -> float:
        return self.plus_single + self.minus_single + self.double


@dataclass(frozen=True)
class KeyTally:
    """Key-basis counts: single-click and double-click key bits."""

    single: float
    double: float

    def __post_init__(self):
        if min(self.single, self.double) < 0:
            raise ValidationError("tally counts must be nonnegative")

    @property
    def total(self) -> float:
        return self.single + self.double


@dataclass(frozen=True)
class RateInterval:
    """Closed interval [lo, hi]; raw endpoints retained when clamping occurred."""

    lo: float
    hi: float
    raw_lo: float | None = field(default=None, compare=False)
    raw_hi: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.lo > self.hi + 1e-15:
            raise ValidationError(f"interval lo {self.lo} > hi {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack


def test_error_bounds(tally: EventTally) -> RateInterval:
    """Error-rate interval for test bits: double clicks count as correct (lo) or erroneous (hi)."""
    n = tally.total
    if n <= 0:
        raise DomainError("empty tally")
    return RateInterval(lo=tally.error_single / n, hi=(tally.error_single + tally.double) / n)


def key_error_bounds_other_basis(test_interval: RateInterval, key: KeyTally) -> RateInterval:
    """Error-rate interval in a non-key basis for key bits surviving double-click discard.

    Discarded key bits may have carried any error pattern in the other basis:
    the lower bound assumes all discards were errors, the upper assumes none.
    Results are clamped to [0, 1], raw values retained.
    """
    if key.single <= 0:
        raise DomainError("no single-click key bits")
    n_key = key.total
    raw_lo = (test_interval.lo * n_key - key.double) / key.single
    raw_hi = test_interval.hi * n_key / key.single
    return RateInterval(
        lo=max(0.0, raw_lo), hi=min(1.0, raw_hi), raw_lo=raw_lo, raw_hi=raw_hi
    )


def key_error_same_basis(tally: EventTally) -> float:
    """Key-basis error rate of post-selected key bits: single-click errors over single clicks."""
    singles = tally.correct_single + tally.error_single
    if singles <= 0:
        raise DomainError("no single-click events")
    return tally.error_single / singles


def stokes_bounds(tally: SignedTally) -> RateInterval:
    """Interval for the mean of a +/-1 observable; double clicks swing the mean either way."""
    n = tally.total
    if n <= 0:
        raise DomainError("empty tally")
    base = tally.plus_single - tally.minus_single
    return RateInterval(lo=(base - tally.double) / n, hi=(base + tally.double) / n)


@dataclass(frozen=True)
class TomographyStateSet:
    """Affine family rho = I/2 + sum_W t_W W / 2 with each t_W in an interval.

    ``intersects_psd`` reports whether some member is a physical state, i.e.
    whether the box of Bloch vectors meets the unit ball.
    """

    intervals: dict[str, RateInterval]
    center: np.ndarray
    min_bloch_norm: float
    max_bloch_norm: float
    intersects_psd: bool

    def state_at(self, t: dict[str, float]) -> np.ndarray:
        rho = IDENTITY.copy() / 2
        for w, val in t.items():
            rho += val * PAULI[w] / 2
        return rho


def tomography_state_set(
    x: RateInterval, y: RateInterval, z: RateInterval
) -> TomographyStateSet:
    """Constraint set of qubit states consistent with three Pauli-mean intervals.

    The feasible Bloch vectors form a box; its maximal norm sits at a corner
    and its minimal norm at the per-axis clamp of the origin into the box, so
    the PSD (unit-ball) intersection test is exact.
    """
    intervals = {"X": x, "Y": y, "Z": z}
    mids = {w: (iv.lo + iv.hi) / 2 for w, iv in intervals.items()}
    corners = np.array(
        [[cx, cy, cz] for cx in (x.lo, x.hi) for cy in (y.lo, y.hi) for cz in (z.lo, z.hi)]
    )
    max_norm = float(np.linalg.norm(corners, axis=1).max())
    nearest = np.array([min(max(0.0, iv.lo), iv.hi) for iv in (x, y, z)])
    min_norm = float(np.linalg.norm(nearest))
    center = IDENTITY.copy() / 2
    for w, t in mids.items():
        center += t * PAULI[w] / 2
    return TomographyStateSet(
        intervals=intervals,
        center=center,
        min_bloch_norm=min_norm,
        max_bloch_norm=max_norm,
        intersects_psd=min_norm <= 1.0,
    )


def chsh_correlator_bounds(tally: SignedTally) -> RateInterval:
    """Interval for one correlator E[A_i B_j] from product-outcome tallies.

    A trial counts as double-click when either side's detector pair
    double-clicked; single-click trials contribute their +/-1 product.
    """
    return stokes_bounds(tally)


def chsh_violation_bounds(
    e11: RateInterval, e12: RateInterval, e21: RateInterval, e22: RateInterval
) -> RateInterval:
    """Interval for E[A1B1] + E[A1B2] + E[A2B1] - E[A2B2] by interval arithmetic."""
    return RateInterval(
        lo=e11.lo + e12.lo + e21.lo - e22.hi,
        hi=e11.hi + e12.hi + e21.hi - e22.lo,
    )


def fidelity_lower_bound(chi_obs: float) -> float:
    """Lower bound on fidelity with a maximally entangled pair from an observed CHSH value.

    Returns (1 + sqrt((chi/2)^2 - 1)) / 2 for chi >= 2 and the vacuous 1/2
    below the classical threshold.  Values beyond the quantum maximum 2*sqrt(2)
    indicate inconsistent statistics.
    """
    if chi_obs > CHSH_QUANTUM_MAX + _CHSH_MAX_SLACK:
        raise InconsistentStatisticsError(
            f"CHSH value {chi_obs} exceeds the quantum maximum {CHSH_QUANTUM_MAX}"
        )
    if chi_obs < 2.0:
        return 0.5
    arg = (min(chi_obs, CHSH_QUANTUM_MAX) / 2.0) ** 2 - 1.0
    return (1.0 + math.sqrt(max(arg, 0.0))) / 2.0
