"""Brute-force tensor-space reference implementations.

Everything here works on full 2^n-dimensional arrays and stays deliberately
independent of the package's symmetric-subspace code paths, so agreement is
meaningful.
"""

import itertools
import math

import numpy as np


def kron_chain(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def dicke_vector_full(n, k):
    """2^n-dimensional Dicke vector with k ones, bit i of the index = photon i."""
    v = np.zeros(2**n, dtype=complex)
    for idx in range(2**n):
        if bin(idx).count("1") == k:
            v[idx] = 1.0
    return v / np.linalg.norm(v)


def symmetric_projector(n):
    p = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n + 1):
        d = dicke_vector_full(n, k)
        p += np.outer(d, d.conj())
    return p


def project_to_dicke(full_vector, n):
    """Dicke-basis amplitudes of the symmetric component of a 2^n vector."""
    return np.array(
        [np.vdot(dicke_vector_full(n, k), full_vector) for k in range(n + 1)]
    )


def product_state_full(factors):
    out = np.array([1.0 + 0j])
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def apply_unitary_full(rho_full, u, n):
    big = kron_chain([u] * n)
    return big @ rho_full @ big.conj().T


def partial_trace_keep_one(rho_full, n, keep):
    """2x2 reduced state of photon ``keep`` from a 2^n density matrix."""
    tensor = rho_full.reshape([2] * (2 * n))
    axes_order = [keep] + [i for i in range(n) if i != keep]
    axes_order += [a + n for a in axes_order]
    tensor = np.transpose(tensor, axes_order)
    tensor = tensor.reshape(2, 2 ** (n - 1), 2, 2 ** (n - 1))
    return np.einsum("ikjk->ij", tensor)


def permute_photons(rho_full, n, perm):
    tensor = rho_full.reshape([2] * (2 * n))
    axes = list(perm) + [p + n for p in perm]
    return np.transpose(tensor, axes).reshape(2**n, 2**n)


def string_counts(string, m):
    counts = [0] * m
    for s in string:
        counts[s] += 1
    return tuple(counts)


def pnr_distribution_full(rho_full, elements, n):
    """Count-vector law by summing Tr((M_{x_1} x ... x M_{x_n}) rho) over all strings."""
    m = len(elements)
    probs = {}
    for string in itertools.product(range(m), repeat=n):
        op = kron_chain([elements[s] for s in string])
        p = np.trace(op @ rho_full).real
        key = string_counts(string, m)
        probs[key] = probs.get(key, 0.0) + p
    return probs


def situation2_full(rho_full, elements, n):
    """Outcome-i probability: count-weighted average over the full string law."""
    m = len(elements)
    probs = np.zeros(m)
    for counts, p in pnr_distribution_full(rho_full, elements, n).items():
        for i in range(m):
            probs[i] += p * counts[i] / n
    return probs


def multinomial(n, counts):
    out, rem = 1, n
    for c in counts:
        out *= math.comb(rem, c)
        rem -= c
    return out
