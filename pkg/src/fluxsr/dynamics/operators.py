"""Collective spin operators on the N-qubit computational basis.

Basis index s encodes qubit j in bit j; a set bit means the qubit is
excited, so sigma_z^(j) is +1 on it.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

MAX_QUBITS = 14


@dataclass(frozen=True)
class CollectiveOps:
    n: int
    jp: sp.csr_matrix
    jm: sp.csr_matrix
    jz: sp.csr_matrix
    sz: tuple
    sx: tuple

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def sx_total(self) -> sp.csr_matrix:
        return sum(self.sx[1:], self.sx[0]).tocsr()


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"number of qubits must lie in [1, {MAX_QUBITS}], got {n}")


def sigma_plus(n: int, j: int) -> sp.csr_matrix:
    dim = 1 << n
    s = np.arange(dim)
    cols = s[(s >> j) & 1 == 0]
    rows = cols | (1 << j)
    return sp.csr_matrix((np.ones(cols.size, complex), (rows, cols)), shape=(dim, dim))


def sigma_z(n: int, j: int) -> sp.csr_matrix:
    s = np.arange(1 << n)
    return sp.diags(2.0 * ((s >> j) & 1) - 1.0, format="csr").astype(complex)


def collective_ops(n: int) -> CollectiveOps:
    _check_n(n)
    sps = [sigma_plus(n, j) for j in range(n)]
    sz = tuple(sigma_z(n, j) for j in range(n))
    sx = tuple((p + p.T).tocsr() for p in sps)
    jp = sum(sps[1:], sps[0]).tocsr()
    jz = sum(sz[1:], sz[0]).tocsr()
    return CollectiveOps(n=n, jp=jp, jm=jp.T.conj().tocsr(), jz=jz, sz=sz, sx=sx)


def excitation_numbers(n: int) -> np.ndarray:
    s = np.arange(1 << n)
    return np.array([bin(x).count("1") for x in s])


def basis_index(bits) -> int:
    """Index of the computational state with qubit j excited iff bits[j]."""
    return int(sum(1 << j for j, b in enumerate(bits) if b))


def fock_state(bits) -> np.ndarray:
    n = len(bits)
    _check_n(n)
    rho = np.zeros((1 << n, 1 << n), complex)
    i = basis_index(bits)
    rho[i, i] = 1.0
    return rho


def product_state(psis) -> np.ndarray:
    """Density matrix of a product of single-qubit pure states.

    ``psis[j] = (ground amplitude, excited amplitude)`` for qubit j.
    """
    psis = np.asarray(psis, complex)
    _check_n(len(psis))
    v = np.ones(1, complex)
    for psi in psis:
        # qubit j is bit j, so later qubits are the more significant factors
        v = np.kron(psi, v)
    return np.outer(v, v.conj())


def dicke_state(n: int, k: int) -> np.ndarray:
    """Symmetric state with k excitations, as a normalized vector."""
    _check_n(n)
    v = (excitation_numbers(n) == k).astype(complex)
    return v / np.sqrt(comb(n, k))


def symmetric_projector(n: int) -> np.ndarray:
    vs = np.stack([dicke_state(n, k) for k in range(n + 1)], axis=1)
    return vs @ vs.conj().T


def excited_count(rho: np.ndarray) -> float:
    """Sum over qubits of (1 + <sigma_z>)/2."""
    n = int(np.log2(rho.shape[0]))
    return float(np.real(np.diagonal(rho) @ excitation_numbers(n)))


def expect(op, rho: np.ndarray) -> float:
    return float(np.real((op @ rho).trace()))
