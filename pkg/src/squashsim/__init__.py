"""Numerical toolkit for multi-photon polarization signals behind threshold detectors.

Exact symmetric-subspace state handling, detection-statistics equivalence
checks, interval bounds on error rates / Stokes parameters / CHSH
correlators, six-state and BB84 key rates, decoy-state parameter
recovery, passive basis selection, and seeded session simulation.
"""

from .detection import (
    OutcomeDistribution,
    PnrDistribution,
    QubitPovm,
    pnr_distribution,
    situation1_distribution,
    situation2_distribution,
    situation4_distribution,
    verify_theorem1,
)
from .keyrates import (
    ObservedRates,
    SixStateSolution,
    bb84_rate_discard,
    bb84_rate_random_assign,
    bb84_rate_statpreserve_discard,
    binary_entropy,
    shannon_entropy,
    sixstate_rate_closedform,
    sixstate_rate_numeric,
)
from .statbounds import (
    EventTally,
    KeyTally,
    RateInterval,
    SignedTally,
    chsh_correlator_bounds,
    chsh_violation_bounds,
    fidelity_lower_bound,
    key_error_bounds_other_basis,
    key_error_same_basis,
    stokes_bounds,
    test_error_bounds,
    tomography_state_set,
)
from .symstate import (
    QubitState,
    QubitUnitary,
    SymmetricPhotonState,
    apply_unitary,
    expand_full,
    squash,
    symmetrize,
)

__version__ = "0.1.0"
