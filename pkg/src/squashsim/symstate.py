"""Multi-photon polarization states on the symmetric (Dicke) subspace.

An n-photon state in a single spatio-temporal mode lives on the
(n+1)-dimensional symmetric subspace of n qubits.  Basis vector k holds
n-k horizontally and k vertically polarized photons.  Working in this
basis keeps every operation polynomial in n; the exponentially large
tensor representation is exposed only through :func:`expand_full` as a
brute-force cross-check for small n.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DegenerateInputError, ValidationError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
UNITARITY_TOL = 1e-12

# 2**n density matrices get large fast; 12 photons is plenty for cross-checks.
MAX_FULL_EXPANSION_PHOTONS = 12
_PROJECTION_NORM_FLOOR = 1e-14


def _validate_density_matrix(dm: np.ndarray, dim: int, what: str) -> np.ndarray:
    dm = np.asarray(dm, dtype=complex)
    if dm.shape != (dim, dim):
        raise ValidationError(f"{what}: expected shape {(dim, dim)}, got {dm.shape}")
    if np.abs(dm - dm.conj().T).max() > HERMITICITY_TOL:
        raise ValidationError(f"{what}: not Hermitian within {HERMITICITY_TOL}")
    trace = dm.trace()
    if abs(trace - 1.0) > TRACE_TOL:
        raise ValidationError(f"{what}: trace {trace} != 1 within {TRACE_TOL}")
    eigs = np.linalg.eigvalsh(dm)
    if eigs.min() < EIGENVALUE_FLOOR:
        # Deliberately not clipped: a negative eigenvalue is a construction bug.
        raise ValidationError(f"{what}: negative eigenvalue {eigs.min()}")
    dm = dm.copy()
    dm.flags.writeable = False
    return dm


class QubitState:
    """Single-qubit density matrix."""

    __slots__ = ("dm",)

    def __init__(self, dm: np.ndarray):
        self.dm = _validate_density_matrix(dm, 2, "QubitState")

    @classmethod
    def from_ket(cls, ket: Sequence[complex]) -> "QubitState":
        k = np.asarray(ket, dtype=complex)
        return cls(np.outer(k, k.conj()))

    def bloch_vector(self) -> np.ndarray:
        """(x, y, z) Bloch components, each Tr(rho W)."""
        from .paulis import PAULI

        return np.array([np.trace(self.dm @ PAULI[w]).real for w in ("X", "Y", "Z")])


class QubitUnitary:
    """2x2 unitary, e.g. the waveplate transform selecting a measurement basis."""

    __slots__ = ("u",)

    def __init__(self, u: np.ndarray):
        u = np.asarray(u, dtype=complex)
        if u.shape != (2, 2):
            raise ValidationError(f"QubitUnitary: expected 2x2, got {u.shape}")
        if np.abs(u @ u.conj().T - np.eye(2)).max() > UNITARITY_TOL:
            raise ValidationError("QubitUnitary: u u^dag != I within tolerance")
        self.u = u.copy()
        self.u.flags.writeable = False


class SymmetricPhotonState:
    """Density matrix of n >= 1 indistinguishable photons in the Dicke basis."""

    __slots__ = ("n", "dm")

    def __init__(self, n: int, dm: np.ndarray):
        if n < 1:
            raise ValidationError(f"photon count must be >= 1, got {n}")
        self.n = int(n)
        self.dm = _validate_density_matrix(dm, n + 1, f"SymmetricPhotonState(n={n})")

    @classmethod
    def from_dicke_amplitudes(cls, n: int, amplitudes: Sequence[complex]) -> "SymmetricPhotonState":
        a = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(a)
        if norm < _PROJECTION_NORM_FLOOR:
            raise DegenerateInputError("zero-norm amplitude vector")
        a = a / norm
        return cls(n, np.outer(a, a.conj()))

    @classmethod
    def dicke(cls, n: int, k: int) -> "SymmetricPhotonState":
        """Pure Dicke state with k vertically polarized photons."""
        if not 0 <= k <= n:
            raise ValidationError(f"need 0 <= k <= n, got k={k}, n={n}")
        a = np.zeros(n + 1, dtype=complex)
        a[k] = 1.0
        return cls(n, np.outer(a, a.conj()))

    @classmethod
    def mixture(cls, weighted: Iterable[tuple[float, "SymmetricPhotonState"]]) -> "SymmetricPhotonState":
        """Convex combination of same-n states."""
        pairs = list(weighted)
        if not pairs:
            raise ValidationError("empty mixture")
        n = pairs[0][1].n
        dm = np.zeros((n + 1, n + 1), dtype=complex)
        total = 0.0
        for w, state in pairs:
            if state.n != n:
                raise ValidationError("mixture components must share the photon count")
            if w < 0:
                raise ValidationError(f"negative mixture weight {w}")
            dm += w * state.dm
            total += w
        if abs(total - 1.0) > TRACE_TOL:
            raise ValidationError(f"mixture weights sum to {total}, expected 1")
        return cls(n, dm)

    def lambda_diagonal(self) -> np.ndarray:
        """Per-tensor-string collapse probabilities lambda_k, k = number of V photons.

        Entry k is <Dicke k|rho|Dicke k> / C(n, k): the probability of collapsing
        onto any one 2^n basis string with k vertical photons.  The multinomially
        weighted sum over k is 1.
        """
        return np.array([self.dm[k, k].real / math.comb(self.n, k) for k in range(self.n + 1)])


def _product_dicke_amplitudes(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Unnormalized Dicke amplitudes <Dicke k | psi_1 x ... x psi_n>.

    The sum over basis strings with k ones of the product of factor amplitudes
    is the k-th coefficient of prod_j (a_j + b_j z); dividing by sqrt(C(n,k))
    gives the Dicke overlap.
    """
    n = len(factors)
    poly = np.array([1.0 + 0j])
    for f in factors:
        poly = np.convolve(poly, np.array([f[0], f[1]]))
    binom = np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)
    return poly / np.sqrt(binom)


def symmetrize(product_factors: Sequence[Sequence[complex]]) -> SymmetricPhotonState:
    """Normalized projection of a product of single-photon kets onto the symmetric subspace.

    Raises DegenerateInputError if the projection norm falls below 1e-14.
    """
    factors = [np.asarray(f, dtype=complex) for f in product_factors]
    if len(factors) < 1:
        raise ValidationError("need at least one photon")
    for f in factors:
        if f.shape != (2,):
            raise ValidationError(f"factor must be a 2-vector, got shape {f.shape}")
        if abs(np.linalg.norm(f) - 1.0) > 1e-12:
            raise ValidationError("factor kets must be normalized")
    amps = _product_dicke_amplitudes(factors)
    norm = np.linalg.norm(amps)
    if norm < _PROJECTION_NORM_FLOOR:
        raise DegenerateInputError("symmetric projection has near-zero norm")
    amps /= norm
    return SymmetricPhotonState(len(factors), np.outer(amps, amps.conj()))


def symmetric_unitary_matrix(n: int, unitary: QubitUnitary) -> np.ndarray:
    """(n+1)-dimensional representation of U acting identically on every photon.

    Column k holds the Dicke amplitudes of U applied factor-wise to a product
    state with k vertical photons; the overlap reduces to the coefficients of
    (u00 + u10 z)^(n-k) (u01 + u11 z)^k.
    """
    u = unitary.u
    s = np.zeros((n + 1, n + 1), dtype=complex)
    binom = np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)
    for k in range(n + 1):
        poly = np.array([1.0 + 0j])
        for _ in range(n - k):
            poly = np.convolve(poly, np.array([u[0, 0], u[1, 0]]))
        for _ in range(k):
            poly = np.convolve(poly, np.array([u[0, 1], u[1, 1]]))
        s[:, k] = poly * np.sqrt(binom[k] / binom)
    return s


def apply_unitary(state: SymmetricPhotonState, unitary: QubitUnitary) -> SymmetricPhotonState:
    """Conjugate the state by U applied to every photon."""
    s = symmetric_unitary_matrix(state.n, unitary)
    return SymmetricPhotonState(state.n, s @ state.dm @ s.conj().T)


def squash(state: SymmetricPhotonState) -> QubitState:
    """Reduced density matrix of a single photon.

    By exchange symmetry the result does not depend on which n-1 photons are
    traced out; for n = 1 this is the identity map.
    """
    n, dm = state.n, state.dm
    k = np.arange(n + 1)
    rho = np.zeros((2, 2), dtype=complex)
    rho[0, 0] = np.sum(dm.diagonal().real * (n - k) / n)
    rho[1, 1] = np.sum(dm.diagonal().real * k / n)
    j = np.arange(n)
    off = np.sum(dm[j, j + 1] * np.sqrt((n - j) * (j + 1)) / n)
    rho[0, 1] = off
    rho[1, 0] = np.conj(off)
    return QubitState(rho)


def expand_full(state: SymmetricPhotonState) -> np.ndarray:
    """Full 2^n x 2^n density matrix, supported on the symmetric subspace.

    Brute-force oracle for tests; guarded at n <= 12.
    """
    n = state.n
    if n > MAX_FULL_EXPANSION_PHOTONS:
        raise CapacityError(f"full expansion limited to n <= {MAX_FULL_EXPANSION_PHOTONS}, got {n}")
    dim = 2**n
    v = np.zeros((dim, n + 1), dtype=complex)
    for idx in range(dim):
        k = idx.bit_count()
        v[idx, k] = 1.0
    for k in range(n + 1):
        v[:, k] /= np.sqrt(math.comb(n, k))
    return v @ state.dm @ v.conj().T


def random_state(n: int, rng: np.random.Generator) -> SymmetricPhotonState:
    """Random mixed state on the symmetric subspace (Ginibre construction)."""
    dim = n + 1
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    dm = g @ g.conj().T
    return SymmetricPhotonState(n, dm / dm.trace())


def random_unitary(rng: np.random.Generator) -> QubitUnitary:
    """Haar-random 2x2 unitary via QR with phase correction."""
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(g)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return QubitUnitary(q)
