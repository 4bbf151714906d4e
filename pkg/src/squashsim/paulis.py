"""Qubit constants: Pauli matrices, the X/Y/Z eigenbases, and basis projectors."""

import numpy as np

_S2 = 1.0 / np.sqrt(2.0)

IDENTITY = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Eigenbasis (|0_W>, |1_W>) of each Pauli, eigenvalues (+1, -1).
BASIS_KETS = {
    "Z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "X": (np.array([_S2, _S2], dtype=complex), np.array([_S2, -_S2], dtype=complex)),
    "Y": (np.array([_S2, 1j * _S2], dtype=complex), np.array([_S2, -1j * _S2], dtype=complex)),
}

BASIS_LABELS = ("X", "Y", "Z")


def projector(ket: np.ndarray) -> np.ndarray:
    """Rank-one projector |ket><ket|."""
    return np.outer(ket, ket.conj())


def basis_projectors(basis: str) -> tuple[np.ndarray, np.ndarray]:
    """Pair of projectors onto the eigenkets of the given Pauli basis."""
    k0, k1 = BASIS_KETS[basis]
    return projector(k0), projector(k1)
