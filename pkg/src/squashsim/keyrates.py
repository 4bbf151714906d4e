"""Asymptotic key-generation rates for the six-state and BB84 protocols.

Rates are bits per detected signal.  The channel is summarized by the
erroneous single-click rate and the double-click rate observed on the
test bits (identical across bases); key bits are measured in one basis
and double-click key bits are discarded, which pins the key-basis error
rate and leaves the other bases' error rates known only as intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, ClosedFormConditionError, ValidationError

_FEAS_TOL = 1e-12
_CONSTRAINT_TOL = 1e-8


@dataclass(frozen=True)
class ObservedRates:
    """Asymptotic channel observation: erroneous single-click and double-click rates."""

    eps: float
    delta: float

    def __post_init__(self):
        if self.eps < 0 or self.delta < 0:
            raise ValidationError("rates must be nonnegative")
        if self.eps + self.delta > 1 + 1e-12:
            raise ValidationError("eps + delta must not exceed 1")

    def key_basis_error(self) -> float:
        """Key-basis error rate after discarding double clicks: eps / (1 - delta)."""
        if self.delta >= 1:
            raise DomainError("all events are double clicks")
        return self.eps / (1.0 - self.delta)

    def other_basis_error_interval(self) -> tuple[float, float]:
        """Range of the non-key-basis key-bit error rates, clamped to [0, 1]."""
        if self.delta >= 1:
            raise DomainError("all events are double clicks")
        lo = (self.eps - self.delta) / (1.0 - self.delta)
        hi = (self.eps + self.delta) / (1.0 - self.delta)
        return max(0.0, lo), min(1.0, hi)


def binary_entropy(x: float) -> float:
    """Base-2 binary entropy with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def shannon_entropy(probs) -> float:
    """Base-2 entropy -sum p log p with the 0 log 0 = 0 convention."""
    p = np.asarray(probs, dtype=float)
    if (p < 0).any():
        raise DomainError("negative probability")
    if p.sum() > 1.0 + 1e-10:
        raise DomainError(f"probabilities sum to {p.sum()} > 1")
    mask = p > 0
    return float(-(p[mask] * np.log2(p[mask])).sum())


def _entropy_rows(b0, b1, b2, b3) -> np.ndarray:
    """Vectorized four-outcome entropy; negative inputs yield NaN via masking upstream."""
    h = np.zeros_like(b0)
    for b in (b0, b1, b2, b3):
        pos = b > 0
        h = h - np.where(pos, b * np.log2(np.where(pos, b, 1.0)), 0.0)
    return h


@dataclass(frozen=True)
class SixStateSolution:
    """Worst-case diagonal-Bell-weight decomposition and the resulting key rate.

    b1 + b2 is the key-basis error rate, b2 + b3 and b1 + b3 the other two.
    """

    b0: float
    b1: float
    b2: float
    b3: float
    rate: float

    def __post_init__(self):
        bs = (self.b0, self.b1, self.b2, self.b3)
        if min(bs) < -1e-10:
            raise ValidationError(f"negative weight in {bs}")
        if abs(sum(bs) - 1.0) > 1e-10:
            raise ValidationError(f"weights sum to {sum(bs)}")


def _sixstate_box(obs: ObservedRates) -> tuple[float, float, float, float, float]:
    """Search region: key-basis error (fixed), one free error rate, and the overlap weight.

    The overlap weight b2 ranges over the interval implied by treating the two
    free error rates independently; combined with the error-rate interval for
    the remaining free rate this reproduces the closed-form optimum.
    """
    e_key = obs.key_basis_error()
    ex_lo, ex_hi = obs.other_basis_error_interval()
    b2_lo = max(0.0, (obs.eps - 2 * obs.delta) / (2 * (1 - obs.delta)))
    b2_hi = (obs.eps + 2 * obs.delta) / (2 * (1 - obs.delta))
    return e_key, ex_lo, ex_hi, b2_lo, b2_hi


def _evaluate_grid(e_key: float, ex: np.ndarray, b2: np.ndarray):
    """Entropy surface over (e_x, b2) grid points; infeasible weights masked out."""
    exg, b2g = np.meshgrid(ex, b2, indexing="ij")
    b1 = e_key - b2g
    b3 = exg - b2g
    b0 = 1.0 - b1 - b2g - b3
    feasible = (b1 >= -_FEAS_TOL) & (b3 >= -_FEAS_TOL) & (b0 >= -_FEAS_TOL) & (b2g >= -_FEAS_TOL)
    h = _entropy_rows(np.maximum(b0, 0), np.maximum(b1, 0), np.maximum(b2g, 0), np.maximum(b3, 0))
    h = np.where(feasible, h, -np.inf)
    return h, exg, b2g, b1, b3, b0


def sixstate_rate_numeric(obs: ObservedRates, resolution: float = 1e-6) -> SixStateSolution:
    """Key rate of the six-state protocol by grid minimization over consistent states.

    Minimizes (1 - delta) * (1 - H(b0..b3)) over the constraint region, i.e.
    maximizes the four-outcome entropy.  Coarse 200x200 grid over the search
    box, then repeated local refinement until the box width reaches
    ``resolution``.  Exact ties resolve to the lexicographically smallest grid
    point, so results do not depend on evaluation order.
    """
    if resolution <= 0:
        raise ValidationError("resolution must be positive")
    if obs.eps + obs.delta >= 1:
        raise DomainError("eps + delta must be < 1")
    e_key, ex_lo, ex_hi, b2_lo, b2_hi = _sixstate_box(obs)

    def best_on(ex_range, b2_range, points):
        ex = np.linspace(ex_range[0], ex_range[1], points)
        b2 = np.linspace(b2_range[0], b2_range[1], points)
        h, exg, b2g, b1, b3, b0 = _evaluate_grid(e_key, ex, b2)
        if not np.isfinite(h).any():
            return None
        flat = np.argmax(h)  # first occurrence = lexicographically smallest (e_x, b2)
        i, j = np.unravel_index(flat, h.shape)
        return h[i, j], ex[i], b2[j], b1[i, j], b3[i, j], b0[i, j]

    found = best_on((ex_lo, ex_hi), (b2_lo, b2_hi), 200)
    if found is None:
        raise InfeasibleError("no consistent state in the search region")
    h_best, ex_c, b2_c, b1_c, b3_c, b0_c = found
    width_ex = ex_hi - ex_lo
    width_b2 = b2_hi - b2_lo
    width = max(width_ex, width_b2)
    while width > resolution:
        width_ex /= 10.0
        width_b2 /= 10.0
        width = max(width_ex, width_b2)
        ex_range = (max(ex_lo, ex_c - width_ex), min(ex_hi, ex_c + width_ex))
        b2_range = (max(b2_lo, b2_c - width_b2), min(b2_hi, b2_c + width_b2))
        found = best_on(ex_range, b2_range, 21)
        if found is not None and found[0] >= h_best:
            h_best, ex_c, b2_c, b1_c, b3_c, b0_c = found
    rate = max(0.0, (1.0 - obs.delta) * (1.0 - h_best))
    return SixStateSolution(
        b0=max(0.0, b0_c), b1=max(0.0, b1_c), b2=max(0.0, b2_c), b3=max(0.0, b3_c), rate=rate
    )


def sixstate_rate_closedform(obs: ObservedRates) -> SixStateSolution:
    """Closed-form six-state optimum, valid when double clicks are rare.

    Takes the overlap weight at the bottom of its interval and the free error
    rate at the top.  Valid when that bottom value exceeds the unconstrained
    optimum e_key * e_x_hi and all weights stay nonnegative; otherwise raises
    ClosedFormConditionError and the caller should use the numeric minimizer.
    """
    e_key = obs.key_basis_error()
    ex_hi = obs.other_basis_error_interval()[1]
    b2 = (obs.eps - 2 * obs.delta) / (2 * (1 - obs.delta))
    if b2 < e_key * ex_hi - _FEAS_TOL:
        raise ClosedFormConditionError(
            f"overlap weight {b2} below unconstrained optimum {e_key * ex_hi}; use the numeric path"
        )
    b1 = e_key - b2
    b3 = ex_hi - b2
    b0 = 1.0 - b1 - b2 - b3
    if min(b0, b1, b2, b3) < -_FEAS_TOL:
        raise ClosedFormConditionError("negative weight; use the numeric path")
    rate = max(0.0, (1.0 - obs.delta) * (1.0 - shannon_entropy([b0, b1, b2, b3])))
    return SixStateSolution(b0=b0, b1=max(0.0, b1), b2=max(0.0, b2), b3=max(0.0, b3), rate=rate)


def bb84_rate_discard(obs: ObservedRates) -> float:
    """BB84 rate with double-click key bits discarded.

    (1 - delta) * [1 - h(eps/(1-delta)) - h((eps+delta)/(1-delta))], floored at 0.
    """
    if obs.delta >= 1:
        raise DomainError("all events are double clicks")
    bit = obs.eps / (1 - obs.delta)
    phase = (obs.eps + obs.delta) / (1 - obs.delta)
    if bit > 1 or phase > 1:
        return 0.0
    return max(0.0, (1 - obs.delta) * (1 - binary_entropy(bit) - binary_entropy(phase)))


def bb84_rate_random_assign(obs: ObservedRates) -> float:
    """BB84 rate with double clicks kept and assigned a random bit.

    1 - 2 h(eps + delta/2), floored at 0.
    """
    arg = obs.eps + obs.delta / 2
    if arg > 1:
        raise DomainError(f"effective error rate {arg} > 1")
    return max(0.0, 1 - 2 * binary_entropy(arg))


def bb84_rate_statpreserve_discard(obs: ObservedRates) -> float:
    """BB84 rate for the statistics-preserving analysis with double-click key bits discarded.

    (1 - delta) * [1 - h(eps/(1-delta)) - h((eps+delta/2)/(1-delta))], floored at 0.
    """
    if obs.delta >= 1:
        raise DomainError("all events are double clicks")
    bit = obs.eps / (1 - obs.delta)
    phase = (obs.eps + obs.delta / 2) / (1 - obs.delta)
    if bit > 1 or phase > 1:
        return 0.0
    return max(0.0, (1 - obs.delta) * (1 - binary_entropy(bit) - binary_entropy(phase)))


def bisect_threshold(rate_fn, lo: float, hi: float, tol: float = 1e-4) -> float:
    """Largest eps with positive rate, located by bisection on [lo, hi].

    ``rate_fn`` maps eps to a rate; requires rate_fn(lo) > 0 and rate_fn(hi) <= 0.
    """
    if not (rate_fn(lo) > 0 and rate_fn(hi) <= 0):
        raise DomainError("bisection bracket does not straddle the threshold")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if rate_fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
