"""Finite-sample simulation of QKD sessions under a basis-copying attack.

The attacker either forwards each signal untouched or, with configurable
probabilities, copies it in a random Pauli basis and forwards one or two
photons while keeping one.  Per-signal outcomes are sampled from the
exact threshold-detection law of the forwarded state, so the empirical
tallies can be validated against analytic probabilities to arbitrary
sample size.

Sampling is counter-based: all randomness for a session comes from a
Philox stream keyed by the seed, consumed in fixed-size blocks with five
slots per signal index.  Tallies therefore depend only on (config, seed)
and reduce associatively over signals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import detection
from .errors import ValidationError
from .keyrates import ObservedRates, bb84_rate_discard, sixstate_rate_numeric
from .paulis import BASIS_KETS
from .statbounds import EventTally, KeyTally, RateInterval, test_error_bounds
from .symstate import SymmetricPhotonState, symmetrize

PROTOCOL_BASES = {"six-state": ("X", "Y", "Z"), "bb84": ("X", "Z")}
_SLOTS = 5  # test/key, basis, bit, attack, outcome
_BLOCK = 1 << 16


@dataclass(frozen=True)
class CopyAttack:
    """Copying attack: forward i in {1, 2} copies with probability p_i, basis uniform.

    With probability 1 - p1 - p2 the signal passes untouched; otherwise the
    attacker rewrites it in a uniformly chosen Pauli basis, keeping one copy.
    """

    p1: float
    p2: float

    def __post_init__(self):
        if self.p1 < 0 or self.p2 < 0 or self.p1 + self.p2 > 1:
            raise ValidationError("need p1, p2 >= 0 and p1 + p2 <= 1")

    def error_rate_bounds(self) -> RateInterval:
        """Asymptotic per-basis error-rate interval induced by the attack."""
        lo = 2 * (self.p1 / 6 + self.p2 / 12)
        return RateInterval(lo=lo, hi=lo + 2 * self.p2 / 6)


@dataclass(frozen=True)
class SessionConfig:
    protocol: str
    num_signals: int
    seed: int
    key_basis: str = "Z"
    test_fraction: float = 0.5
    basis_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOL_BASES:
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        if self.num_signals < 1:
            raise ValidationError("need at least one signal")
        if not 0.0 <= self.test_fraction <= 1.0:
            raise ValidationError("test fraction must be in [0, 1]")
        bases = PROTOCOL_BASES[self.protocol]
        if self.key_basis not in bases:
            raise ValidationError(f"key basis {self.key_basis!r} not in {bases}")
        if self.basis_weights is not None:
            if len(self.basis_weights) != len(bases):
                raise ValidationError("one weight per protocol basis required")
            if min(self.basis_weights) < 0 or abs(sum(self.basis_weights) - 1.0) > 1e-12:
                raise ValidationError("weights must be nonnegative and sum to 1")

    @property
    def bases(self) -> tuple[str, ...]:
        return PROTOCOL_BASES[self.protocol]

    @property
    def weights(self) -> np.ndarray:
        if self.basis_weights is not None:
            return np.asarray(self.basis_weights, dtype=float)
        n = len(self.bases)
        return np.full(n, 1.0 / n)


def attack_output_state(
    input_ket: np.ndarray, draw: tuple[str, int] | None
) -> SymmetricPhotonState:
    """State arriving at the receiver for one signal.

    ``draw`` is None for an untouched signal or (basis, copies) for a copy
    event.  Copying a pure qubit in basis W and tracing out the retained copy
    leaves the W-dephased mixture of identical-photon bundles.
    """
    ket = np.asarray(input_ket, dtype=complex)
    if draw is None:
        return symmetrize([ket])
    basis, copies = draw
    k0, k1 = BASIS_KETS[basis]
    w0 = abs(np.vdot(k0, ket)) ** 2
    w1 = abs(np.vdot(k1, ket)) ** 2
    return SymmetricPhotonState.mixture(
        [
            (w0, symmetrize([k0] * copies)),
            (w1, symmetrize([k1] * copies)),
        ]
    )


def _attack_categories(attack: CopyAttack) -> tuple[list, np.ndarray]:
    cats: list = [None]
    probs = [1.0 - attack.p1 - attack.p2]
    for copies, p in ((1, attack.p1), (2, attack.p2)):
        for basis in ("X", "Y", "Z"):
            cats.append((basis, copies))
            probs.append(p / 3.0)
    return cats, np.array(probs)


def _outcome_table(config: SessionConfig, attack: CopyAttack) -> tuple[np.ndarray, list]:
    """Exact threshold-event distributions for every (attack, basis, bit) combination.

    Rows are indexed cat * (#bases * 2) + basis_index * 2 + bit and hold
    (bit0, bit1, double) probabilities for a signal prepared as |bit> of
    ``basis`` and measured in the same basis after the attack acts.
    """
    cats, _ = _attack_categories(attack)
    bases = config.bases
    table = np.zeros((len(cats) * len(bases) * 2, 3))
    for ci, cat in enumerate(cats):
        for bi, basis in enumerate(bases):
            povm = detection.QubitPovm.projective(BASIS_KETS[basis])
            for bit in (0, 1):
                state = attack_output_state(BASIS_KETS[basis][bit], cat)
                dist = detection.situation4_distribution(state, povm)
                row = ci * len(bases) * 2 + bi * 2 + bit
                table[row] = (
                    dist[detection.BIT0],
                    dist[detection.BIT1],
                    dist[detection.DOUBLE_CLICK],
                )
    return table, cats


@dataclass(frozen=True)
class SessionResult:
    config: SessionConfig
    attack: CopyAttack
    test_tallies: dict[str, EventTally]
    key_tally: KeyTally
    num_test: dict[str, int]
    num_key: int


def simulate_session(config: SessionConfig, attack: CopyAttack) -> SessionResult:
    """Sample per-signal threshold-detection outcomes and accumulate tallies.

    Test signals are measured in a random protocol basis matching the
    preparation basis; key signals use the key basis.  Outcomes are drawn from
    the exact event law of the attacked state.  Deterministic for a fixed
    (config, seed).
    """
    table, cats = _outcome_table(config, attack)
    _, cat_probs = _attack_categories(attack)
    cat_cum = np.cumsum(cat_probs)
    basis_cum = np.cumsum(config.weights)
    outcome_cum = np.cumsum(table, axis=1)
    bases = config.bases
    key_basis_idx = bases.index(config.key_basis)

    counts = np.zeros((len(bases), 3), dtype=np.int64)  # test: (correct, error, double)
    key_counts = np.zeros(2, dtype=np.int64)            # key: (single, double)
    n_test_by_basis = np.zeros(len(bases), dtype=np.int64)

    rng = np.random.Generator(np.random.Philox(key=config.seed))
    remaining = config.num_signals
    while remaining > 0:
        batch = min(_BLOCK, remaining)
        u = rng.random((batch, _SLOTS))
        is_test = u[:, 0] < config.test_fraction
        basis_idx = np.searchsorted(basis_cum, u[:, 1], side="right")
        basis_idx = np.minimum(basis_idx, len(bases) - 1)
        basis_idx[~is_test] = key_basis_idx
        bit = (u[:, 2] < 0.5).astype(np.int64)
        cat_idx = np.searchsorted(cat_cum, u[:, 3], side="right")
        cat_idx = np.minimum(cat_idx, len(cats) - 1)
        row = cat_idx * len(bases) * 2 + basis_idx * 2 + bit
        cums = outcome_cum[row]
        outcome = (u[:, 4:5] >= cums[:, :2]).sum(axis=1)  # 0, 1 = single bit, 2 = double

        err = (outcome == 1 - bit) & (outcome != 2)
        corr = outcome == bit
        dbl = outcome == 2
        for bi in range(len(bases)):
            sel = is_test & (basis_idx == bi)
            counts[bi, 0] += int((sel & corr).sum())
            counts[bi, 1] += int((sel & err).sum())
            counts[bi, 2] += int((sel & dbl).sum())
            n_test_by_basis[bi] += int(sel.sum())
        key_sel = ~is_test
        key_counts[0] += int((key_sel & ~dbl).sum())
        key_counts[1] += int((key_sel & dbl).sum())
        remaining -= batch

    tallies = {
        b: EventTally(
            correct_single=int(counts[i, 0]),
            error_single=int(counts[i, 1]),
            double=int(counts[i, 2]),
        )
        for i, b in enumerate(bases)
    }
    return SessionResult(
        config=config,
        attack=attack,
        test_tallies=tallies,
        key_tally=KeyTally(single=int(key_counts[0]), double=int(key_counts[1])),
        num_test={b: int(n_test_by_basis[i]) for i, b in enumerate(bases)},
        num_key=int(key_counts.sum()),
    )


def exact_event_probabilities(config: SessionConfig, attack: CopyAttack) -> dict[str, np.ndarray]:
    """Analytic (correct, error, double) probabilities per basis for matched-basis signals."""
    table, cats = _outcome_table(config, attack)
    _, cat_probs = _attack_categories(attack)
    out = {}
    for bi, basis in enumerate(config.bases):
        p = np.zeros(3)
        for ci in range(len(cats)):
            for bit in (0, 1):
                row = table[ci * len(config.bases) * 2 + bi * 2 + bit]
                correct, error = row[bit], row[1 - bit]
                p += cat_probs[ci] * 0.5 * np.array([correct, error, row[2]])
        out[basis] = p
    return out


@dataclass(frozen=True)
class BasisCheck:
    basis: str
    empirical: np.ndarray
    expected: np.ndarray
    sigmas: np.ndarray
    within_5_sigma: bool


@dataclass(frozen=True)
class EmpiricalReport:
    checks: list[BasisCheck]
    all_within_5_sigma: bool
    error_intervals: dict[str, RateInterval]
    pooled_eps: float
    pooled_delta: float
    sixstate_rate: float | None
    bb84_rate: float | None
    attack_bounds: RateInterval
    attack_bounds_ok: bool
    footnote_margins: dict[str, float] = field(default_factory=dict)


def empirical_report(result: SessionResult) -> EmpiricalReport:
    """Validate empirical frequencies against the exact event law and rate the channel.

    Flags any per-basis frequency more than five binomial standard errors from
    its exact value, checks the attack's error-rate interval containment, and
    feeds the pooled rates through the key-rate formulas.
    """
    exact = exact_event_probabilities(result.config, result.attack)
    checks = []
    intervals = {}
    for basis, tally in result.test_tallies.items():
        n = result.num_test[basis]
        expected = exact[basis]
        if n == 0:
            continue
        emp = np.array([tally.correct_single, tally.error_single, tally.double]) / n
        sig = np.sqrt(np.maximum(expected * (1 - expected), 1e-300) / n)
        within = bool(np.all(np.abs(emp - expected) <= 5 * sig + 1e-12))
        checks.append(
            BasisCheck(basis=basis, empirical=emp, expected=expected, sigmas=sig, within_5_sigma=within)
        )
        intervals[basis] = test_error_bounds(tally)

    total = sum(result.num_test.values())
    pooled_err = sum(t.error_single for t in result.test_tallies.values())
    pooled_dbl = sum(t.double for t in result.test_tallies.values())
    eps_hat = pooled_err / total if total else 0.0
    delta_hat = pooled_dbl / total if total else 0.0

    bounds = result.attack.error_rate_bounds()
    margins = {}
    bounds_ok = True
    for basis, tally in result.test_tallies.items():
        n = result.num_test[basis]
        if n == 0:
            continue
        e_lo = tally.error_single / n
        e_hi = (tally.error_single + tally.double) / n
        sig = 5 * np.sqrt(0.25 / n)
        ok = (bounds.lo - sig <= e_lo) and (e_hi <= bounds.hi + sig)
        margins[basis] = min(e_lo - (bounds.lo - sig), (bounds.hi + sig) - e_hi)
        bounds_ok &= ok

    obs = ObservedRates(eps=min(eps_hat, 1.0), delta=min(delta_hat, 1.0 - eps_hat))
    six = bb84 = None
    try:
        if result.config.protocol == "six-state":
            six = sixstate_rate_numeric(obs).rate
        bb84 = bb84_rate_discard(obs)
    except Exception:
        pass  # infeasible empirical rates are reported as missing, not fatal
    return EmpiricalReport(
        checks=checks,
        all_within_5_sigma=all(c.within_5_sigma for c in checks),
        error_intervals=intervals,
        pooled_eps=eps_hat,
        pooled_delta=delta_hat,
        sixstate_rate=six,
        bb84_rate=bb84,
        attack_bounds=bounds,
        attack_bounds_ok=bounds_ok,
        footnote_margins=margins,
    )
