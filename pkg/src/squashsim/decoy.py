"""Weak-coherent-source channel model and decoy-state parameter recovery.

A phase-randomized source emits n photons with Poisson probability; the
fiber and receiver transmit each photon independently.  Scanning the
source intensity turns the per-photon-number yields and click-type
fractions into a linear system, which is solved here in least-squares
form.  The recovered single-photon statistics feed the key-rate bound
combining overall bit-error correction with single-photon privacy
amplification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, RecoveryError, ValidationError
from .keyrates import binary_entropy

POISSON_TAIL_MASS = 1e-12
_FIT_TAIL_MASS = 1e-14
_RESIDUAL_TOL = 1e-8
_YIELD_FLOOR = 1e-12

UNIVERSAL = "universal"
STAT_PRESERVING = "stat_preserving"


def poisson_weight(mu: float, n: int) -> float:
    """Poisson probability e^-mu mu^n / n!, evaluated in log space."""
    if mu < 0 or n < 0:
        raise DomainError("mu and n must be nonnegative")
    if mu == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def poisson_cutoff(mu: float, tail: float = POISSON_TAIL_MASS) -> int:
    """Smallest N whose Poisson tail mass beyond N is below ``tail``."""
    total, n = 0.0, 0
    while 1.0 - total >= tail:
        total += poisson_weight(mu, n)
        n += 1
    return n


def channel_transmittance(alpha_db_per_km: float, length_km: float) -> float:
    """Fiber transmission probability 10^(-alpha l / 10)."""
    if alpha_db_per_km < 0 or length_km < 0:
        raise DomainError("loss coefficient and length must be nonnegative")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def yield_prob(n: int, eta: float) -> float:
    """Detection probability 1 - (1 - eta)^n for an n-photon signal; no dark counts."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta {eta} outside [0, 1]")
    if n < 0:
        raise DomainError("photon number must be nonnegative")
    return 1.0 - (1.0 - eta) ** n


@dataclass(frozen=True)
class DecoyChannelModel:
    """Channel controlled by an attacker who fixes the per-photon-number click fractions.

    Every n-photon signal that is detected shows an erroneous single click
    with fraction ``eps`` and a double click with fraction ``delta``,
    independent of n.
    """

    alpha_db_per_km: float
    length_km: float
    eta_bob: float
    eps: float
    delta: float

    def __post_init__(self):
        if self.eps < 0 or self.delta < 0 or self.eps + self.delta > 1:
            raise ValidationError("need eps, delta >= 0 and eps + delta <= 1")
        if not 0.0 <= self.eta_bob <= 1.0:
            raise ValidationError("eta_bob must be in [0, 1]")
        if self.alpha_db_per_km < 0 or self.length_km < 0:
            raise ValidationError("fiber parameters must be nonnegative")

    @property
    def eta(self) -> float:
        """Overall single-photon detection probability: channel times receiver."""
        return channel_transmittance(self.alpha_db_per_km, self.length_km) * self.eta_bob


@dataclass(frozen=True)
class PerPhotonStatistics:
    """Per-photon-number yields and click-type fractions for n = 0..n_max.

    Fractions are NaN where the yield vanishes (no detections to classify).
    """

    yields: np.ndarray
    f_error: np.ndarray
    f_correct: np.ndarray
    f_double: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.yields) - 1

    def validate(self, tol: float) -> None:
        """Check the per-n fraction sum identity where fractions are defined."""
        for n in range(self.n_max + 1):
            fs = (self.f_error[n], self.f_correct[n], self.f_double[n])
            if any(math.isnan(f) for f in fs):
                continue
            if abs(sum(fs) - 1.0) > tol:
                raise ValidationError(f"fractions at n={n} sum to {sum(fs)}")


@dataclass(frozen=True)
class IntensityObservables:
    """What Bob sees at one source intensity: gain and click-type fractions.

    Fractions are None when the gain vanishes.
    """

    q: float
    f_error: float | None
    f_correct: float | None
    f_double: float | None

    def __post_init__(self):
        fracs = (self.f_error, self.f_correct, self.f_double)
        if self.q > 0 and all(f is not None for f in fracs):
            if abs(sum(fracs) - 1.0) > 1e-10:
                raise ValidationError(f"fractions sum to {sum(fracs)}")


def per_photon_statistics(model: DecoyChannelModel, n_max: int) -> PerPhotonStatistics:
    """Forward model: yields 1-(1-eta)^n and constant fractions, n = 0..n_max."""
    eta = model.eta
    y = np.array([yield_prob(n, eta) for n in range(n_max + 1)])
    fe = np.where(y > 0, model.eps, np.nan)
    fd = np.where(y > 0, model.delta, np.nan)
    fc = np.where(y > 0, 1.0 - model.eps - model.delta, np.nan)
    stats = PerPhotonStatistics(yields=y, f_error=fe, f_correct=fc, f_double=fd)
    stats.validate(1e-10)
    return stats


def intensity_observables(model: DecoyChannelModel, mu: float) -> IntensityObservables:
    """Poisson-average the per-photon statistics at source intensity mu.

    The photon-number sum is truncated where the Poisson tail mass drops
    below 1e-12.
    """
    if mu < 0:
        raise DomainError("intensity must be nonnegative")
    if mu == 0:
        return IntensityObservables(q=0.0, f_error=None, f_correct=None, f_double=None)
    n_cut = poisson_cutoff(mu)
    eta = model.eta
    q = qe = qc = qd = 0.0
    for n in range(n_cut + 1):
        w = poisson_weight(mu, n) * yield_prob(n, eta)
        q += w
        qe += w * model.eps
        qc += w * (1.0 - model.eps - model.delta)
        qd += w * model.delta
    if q <= 0.0:
        return IntensityObservables(q=0.0, f_error=None, f_correct=None, f_double=None)
    return IntensityObservables(q=q, f_error=qe / q, f_correct=qc / q, f_double=qd / q)


def infinite_decoy_solve(
    observable_fn: Callable[[float], IntensityObservables],
    intensities: Sequence[float],
    n_max: int,
) -> PerPhotonStatistics:
    """Recover per-photon-number statistics from gain data across intensities.

    Solves the truncated linear system Q(mu_j) = sum_n p(mu_j, n) Y_n (and its
    three fraction-weighted companions) in least-squares sense.  The fit keeps
    columns well past ``n_max`` so that the Poisson tail at the largest
    intensity is negligible; rows are weighted by the inverse gain so every
    equation carries comparable relative data error.  Fractions are recovered
    by division wherever the yield exceeds 1e-12.

    Raises RecoveryError on duplicate intensities, rank collapse, or residuals
    above 1e-8.
    """
    mus = [float(m) for m in intensities]
    if len(set(mus)) != len(mus):
        raise RecoveryError("duplicate intensities make the design singular")
    if len(mus) < n_max + 1:
        raise DomainError(f"need at least n_max + 1 = {n_max + 1} distinct intensities")
    obs = [observable_fn(mu) for mu in mus]
    b_q = np.array([o.q for o in obs])
    b_e = np.array([o.q * o.f_error if o.f_error is not None else 0.0 for o in obs])
    b_c = np.array([o.q * o.f_correct if o.f_correct is not None else 0.0 for o in obs])
    b_d = np.array([o.q * o.f_double if o.f_double is not None else 0.0 for o in obs])

    if b_q.max() <= 0.0:
        nan = np.full(n_max + 1, np.nan)
        return PerPhotonStatistics(
            yields=np.zeros(n_max + 1), f_error=nan, f_correct=nan.copy(), f_double=nan.copy()
        )

    n_fit = max(n_max, poisson_cutoff(max(mus), _FIT_TAIL_MASS))
    design = np.array([[poisson_weight(mu, n) for n in range(n_fit + 1)] for mu in mus])
    row_w = 1.0 / np.maximum(np.abs(b_q), 1e-12 * b_q.max())
    a_w = design * row_w[:, None]
    col_s = np.linalg.norm(a_w, axis=0)
    col_s[col_s == 0] = 1.0
    a_scaled = a_w / col_s

    rank = np.linalg.matrix_rank(a_scaled)
    if rank < min(len(mus), n_fit + 1):
        raise RecoveryError(
            f"design rank {rank} < {min(len(mus), n_fit + 1)}; "
            f"condition number {np.linalg.cond(a_scaled):.3e}"
        )

    def solve(b: np.ndarray) -> np.ndarray:
        x = np.linalg.lstsq(a_scaled, b * row_w, rcond=None)[0] / col_s
        resid = np.linalg.norm(design @ x - b) / max(1.0, np.linalg.norm(b))
        if resid > _RESIDUAL_TOL:
            raise RecoveryError(
                f"relative residual {resid:.3e} exceeds {_RESIDUAL_TOL}; "
                f"condition number {np.linalg.cond(a_scaled):.3e}"
            )
        return x[: n_max + 1]

    y = solve(b_q)
    ye, yc, yd = solve(b_e), solve(b_c), solve(b_d)
    defined = np.abs(y) > _YIELD_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        fe = np.where(defined, ye / y, np.nan)
        fc = np.where(defined, yc / y, np.nan)
        fd = np.where(defined, yd / y, np.nan)
    return PerPhotonStatistics(yields=y, f_error=fe, f_correct=fc, f_double=fd)


def single_photon_phase_error_bound(f_error: float, f_double: float) -> float:
    """Worst-case single-photon phase error after discarding double clicks.

    (f_error + f_double) / (1 - f_double), clamped to [0, 1].
    """
    if f_double >= 1.0:
        raise DomainError("all single-photon detections are double clicks")
    return min(1.0, max(0.0, (f_error + f_double) / (1.0 - f_double)))


@dataclass(frozen=True)
class DecoyRate:
    """Key rate per transmitted (or detected) signal with abort diagnostics."""

    rate: float
    phase_error_bound: float
    aborted: bool  # phase error bound reached 1/2, forcing zero rate


def decoy_key_rate(
    model: DecoyChannelModel,
    mu_bar: float,
    variant: str = UNIVERSAL,
    per_detected: bool = False,
) -> DecoyRate:
    """Key rate at signal intensity mu_bar from error correction plus single-photon privacy.

    rate = -Q (1 - F_d) h(e_key) + Q_1 (1 - F_1d) [1 - h(e_phase,1)], floored
    at 0, with Q_1 the single-photon gain.  The ``universal`` variant bounds
    the single-photon phase error by (F_1e + F_1d) / (1 - F_1d); the
    ``stat_preserving`` variant uses (F_1e + F_1d/2) / (1 - F_1d).
    """
    if variant not in (UNIVERSAL, STAT_PRESERVING):
        raise DomainError(f"unknown variant {variant!r}")
    obs = intensity_observables(model, mu_bar)
    if obs.q <= 0.0 or obs.f_error is None:
        raise DomainError("zero gain at the signal intensity")
    singles = obs.f_error + obs.f_correct
    if singles <= 0.0:
        raise DomainError("no single-click events at the signal intensity")
    e_key = obs.f_error / singles

    f1e, f1d = model.eps, model.delta
    if variant == UNIVERSAL:
        e_phase = single_photon_phase_error_bound(f1e, f1d)
    else:
        e_phase = min(1.0, max(0.0, (f1e + f1d / 2.0) / (1.0 - f1d))) if f1d < 1 else 1.0
    q1 = poisson_weight(mu_bar, 1) * yield_prob(1, model.eta)

    if e_phase >= 0.5:
        return DecoyRate(rate=0.0, phase_error_bound=e_phase, aborted=True)
    rate = -obs.q * (1.0 - obs.f_double) * binary_entropy(e_key) + q1 * (1.0 - f1d) * (
        1.0 - binary_entropy(e_phase)
    )
    rate = max(0.0, rate)
    if per_detected:
        rate /= obs.q
    return DecoyRate(rate=rate, phase_error_bound=e_phase, aborted=False)


def optimize_mu(
    model: DecoyChannelModel,
    variant: str = UNIVERSAL,
    search: tuple[float, float] = (1e-4, 2.0),
    per_detected: bool = False,
    scan_points: int = 64,
    tol: float = 1e-6,
) -> tuple[float, DecoyRate]:
    """Best signal intensity by coarse scan plus golden-section refinement.

    The scan locates the global maximum bracket (guarding against silent
    multimodality); golden-section then refines within it.  If every scanned
    rate is zero the scan maximum is returned with rate 0.
    """
    lo, hi = search
    if not (0 <= lo < hi):
        raise DomainError("invalid search range")
    grid = np.linspace(lo, hi, scan_points)
    rates = [decoy_key_rate(model, mu, variant, per_detected).rate for mu in grid]
    i_best = int(np.argmax(rates))
    if rates[i_best] <= 0.0:
        mu = float(grid[i_best])
        return mu, decoy_key_rate(model, mu, variant, per_detected)

    a = grid[max(0, i_best - 1)]
    b = grid[min(scan_points - 1, i_best + 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = decoy_key_rate(model, c, variant, per_detected).rate
    fd = decoy_key_rate(model, d, variant, per_detected).rate
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = decoy_key_rate(model, c, variant, per_detected).rate
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = decoy_key_rate(model, d, variant, per_detected).rate
    mu = (a + b) / 2.0
    result = decoy_key_rate(model, mu, variant, per_detected)
    if result.rate < rates[i_best]:
        # Refinement must never lose to the coarse scan; fall back if it does.
        mu = float(grid[i_best])
        result = decoy_key_rate(model, mu, variant, per_detected)
    return mu, result
