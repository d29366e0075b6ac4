"""Hamiltonians, dissipators and rate formulas for the cavity-coupled ensemble.

All frequencies and rates are angular, in rad/ns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .operators import CollectiveOps, collective_ops

TWO_PI = 2.0 * math.pi
BAD_CAVITY_MARGIN = 5.0
MAX_TC_QUBITS = 4
MAX_PHOTONS = 20


def mhz(x):
    """Ordinary frequency in MHz to rad/ns."""
    return TWO_PI * np.asarray(x, dtype=float) * 1e-3


def ghz(x):
    return TWO_PI * np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class SpinModel:
    """N qubits with frequencies ``omegas`` coupled with strength g to a lossy cavity."""

    omegas: np.ndarray
    omega_bar: float
    delta_omega: float
    omega_c: float
    g: float
    kappa: float

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        if w.size < 1:
            raise ValueError("at least one qubit is required")
        if not self.g > 0:
            raise ValueError("g must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.delta_omega < 0:
            raise ValueError("delta_omega must be non-negative")

    @classmethod
    def sample(cls, n, omega_bar, delta_omega, omega_c, g, kappa, rng) -> "SpinModel":
        omegas = omega_bar + delta_omega * rng.standard_normal(n)
        return cls(omegas, omega_bar, delta_omega, omega_c, g, kappa)

    @classmethod
    def homogeneous(cls, n, omega, g, kappa, omega_c=None) -> "SpinModel":
        return cls(np.full(n, omega), omega, 0.0, omega if omega_c is None else omega_c, g, kappa)

    @property
    def n(self) -> int:
        return self.omegas.size

    @property
    def chi(self) -> float:
        return self.omega_c - self.omega_bar

    @property
    def detunings(self) -> np.ndarray:
        return self.omegas - self.omega_bar

    @property
    def bad_cavity(self) -> bool:
        """Whether kappa exceeds both the frequency spread and g^2 N / kappa by a clear margin."""
        spread = float(np.max(np.abs(self.detunings)))
        return (
            self.kappa >= BAD_CAVITY_MARGIN * spread
            and self.kappa >= BAD_CAVITY_MARGIN * self.g**2 * self.n / self.kappa
        )

    def permuted(self, perm) -> "SpinModel":
        return SpinModel(self.omegas[list(perm)], self.omega_bar, self.delta_omega,
                         self.omega_c, self.g, self.kappa)


@dataclass(frozen=True)
class DriveSpec:
    """Gaussian envelope lambda_max exp(-((t - b)/sigma)^2) with unit pulse area pi."""

    lambda_max: float
    omega_d: float

    def __post_init__(self):
        if not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(math.pi) / self.lambda_max

    @property
    def b(self) -> float:
        return 4.0 * self.sigma * math.sqrt(2.0 * math.log(2.0))

    @property
    def window(self) -> tuple[float, float]:
        return 0.0, 2.0 * self.b

    def envelope(self, t):
        return self.lambda_max * np.exp(-(((np.asarray(t) - self.b) / self.sigma) ** 2))


def shift_coefficient(m: SpinModel) -> float:
    """Coefficient of J+J- in the eliminated Hamiltonian, Re[chi g^2 / Gamma^2]."""
    gam = complex(m.kappa, m.chi)
    return float((m.chi * m.g**2 / gam**2).real)


def superradiant_rate(m: SpinModel) -> float:
    """Collective loss rate kappa g^2 / |Gamma|^2."""
    return m.kappa * m.g**2 / (m.kappa**2 + m.chi**2)


def h_ae(m: SpinModel, ops: CollectiveOps | None = None) -> sp.csr_matrix:
    ops = ops or collective_ops(m.n)
    h = sum((dw / 2.0) * z for dw, z in zip(m.detunings, ops.sz))
    c = shift_coefficient(m)
    if c != 0.0:
        h = h + c * (ops.jp @ ops.jm)
    return sp.csr_matrix(h)


def ae_collapse(m: SpinModel, ops: CollectiveOps | None = None):
    ops = ops or collective_ops(m.n)
    return [(superradiant_rate(m), ops.jm)]


def intensity(m: SpinModel, jpjm):
    """Emitted intensity 2 g^2/kappa * omega_c * <J+J->."""
    jpjm = np.asarray(jpjm, dtype=float)
    if np.any(jpjm < -1e-9):
        raise ValueError("<J+J-> must be non-negative")
    return 2.0 * m.g**2 / m.kappa * m.omega_c * jpjm


def sr_time(m: SpinModel, excited: float) -> float:
    """Peak superradiance time kappa / (g^2 M), in ns for rad/ns rates."""
    if not excited > 0:
        raise ValueError("the excitation number must be positive")
    return m.kappa / (m.g**2 * excited)


def visibility(m: SpinModel, excited: float) -> float:
    """M g^2 / (kappa delta_omega): dephasing time over superradiance time."""
    return excited * m.g**2 / (m.kappa * m.delta_omega)


def drive_hamiltonian(m: SpinModel, d: DriveSpec, t: float, ops: CollectiveOps | None = None):
    ops = ops or collective_ops(m.n)
    h = sum(((w - d.omega_d) / 2.0) * z for w, z in zip(m.omegas, ops.sz))
    return sp.csr_matrix(h + (float(d.envelope(t)) / 2.0) * ops.sx_total)


def m_eff(omegas, omega_d: float, lam: float) -> float:
    """Estimated excited number sum_j lambda^2 / (Delta'_j^2 + lambda^2)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    dp = np.asarray(omegas, dtype=float) - omega_d
    return float(np.sum(lam**2 / (dp**2 + lam**2)))


def _check_chi(m: SpinModel) -> float:
    if m.chi == 0.0:
        raise ValueError("the dispersive model needs a nonzero cavity detuning chi")
    return m.chi


def dispersive_beta(m: SpinModel) -> float:
    return 2.0 * m.g**2 / _check_chi(m)


def dispersive_rate(m: SpinModel) -> float:
    return m.kappa * m.g**2 / _check_chi(m) ** 2


def dispersive_visibility(m: SpinModel, n: int | None = None) -> float:
    """alpha_D = g^2 N kappa / (chi^2 delta_omega)."""
    n = m.n if n is None else n
    return m.g**2 * n * m.kappa / (_check_chi(m) ** 2 * m.delta_omega)


def dispersive_valid(m: SpinModel, tol: float = 0.1) -> bool:
    """Whether (g/chi)^2 is small, with ``tol`` standing in for 'much less than one'."""
    return (m.g / _check_chi(m)) ** 2 < tol


def h_dispersive(m: SpinModel, photon_number: float = 0.0, frame: float = 0.0,
                 ops: CollectiveOps | None = None) -> sp.csr_matrix:
    """Dispersive Hamiltonian with the cavity replaced by its mean photon number.

    ``frame`` removes a common rotation frame/2 * sum sigma_z, which commutes
    with every other term.
    """
    beta = dispersive_beta(m)
    ops = ops or collective_ops(m.n)
    h = sum(((w - frame) / 2.0 + beta * photon_number) * z for w, z in zip(m.omegas, ops.sz))
    return sp.csr_matrix(h + (beta / 2.0) * (ops.jp @ ops.jm))


def dispersive_collapse(m: SpinModel, ops: CollectiveOps | None = None):
    ops = ops or collective_ops(m.n)
    return [(dispersive_rate(m), ops.jm)]


@dataclass(frozen=True)
class CavityModel:
    """Qubits tensored with a truncated cavity; the cavity is the fast index."""

    h: sp.csr_matrix
    a: sp.csr_matrix
    jp: sp.csr_matrix
    jm: sp.csr_matrix
    sz_total: sp.csr_matrix
    number: sp.csr_matrix
    collapse: list
    photon_cutoff: int

    def embed(self, rho_qubits: np.ndarray, photons: int = 0) -> np.ndarray:
        vac = np.zeros((self.photon_cutoff + 1,) * 2, complex)
        vac[photons, photons] = 1.0
        return np.kron(rho_qubits, vac)


def h_full_tavis_cummings(m: SpinModel, photon_cutoff: int, frame: float = 0.0) -> CavityModel:
    """Tavis-Cummings Hamiltonian with cavity loss kappa D[a].

    ``frame`` is subtracted from both qubit and cavity frequencies; the
    shift commutes with H, so number-conserving observables are unchanged.
    """
    if m.n > MAX_TC_QUBITS or not 0 < photon_cutoff <= MAX_PHOTONS:
        raise ValueError(
            f"full cavity model limited to {MAX_TC_QUBITS} qubits and {MAX_PHOTONS} photons"
        )
    ops = collective_ops(m.n)
    nc = photon_cutoff + 1
    a_c = sp.diags(np.sqrt(np.arange(1, nc)), 1, format="csr").astype(complex)
    iq = sp.identity(ops.dim, complex, format="csr")
    ic = sp.identity(nc, complex, format="csr")
    a = sp.kron(iq, a_c, format="csr")
    jp = sp.kron(ops.jp, ic, format="csr")
    jm = sp.kron(ops.jm, ic, format="csr")
    number = (a.T.conj() @ a).tocsr()
    hq = sum(((w - frame) / 2.0) * z for w, z in zip(m.omegas, ops.sz))
    h = (
        sp.kron(hq, ic)
        + (m.omega_c - frame) * number
        + m.g * (jm @ a.T.conj() + jp @ a)
    )
    return CavityModel(
        h=sp.csr_matrix(h),
        a=a,
        jp=jp,
        jm=jm,
        sz_total=sp.kron(ops.jz, ic, format="csr"),
        number=number,
        collapse=[(m.kappa, a)],
        photon_cutoff=photon_cutoff,
    )
