"""Three-junction flux qubit: potential landscape and charge-basis spectrum.

Energies are in GHz (E/h). The quantum problem is expanded in the island
charge basis ``exp(i (n1 phi1 + n2 phi2))`` with ``|n1|, |n2| <= cutoff``; in
the ``(phi_p, phi_m)`` coordinates this is the plane-wave set
``exp(i (k phi_p + l phi_m))`` with ``k = n1 + n2``, ``l = n1 - n2`` (so
``k + l`` is even, which is what 2*pi periodicity in each junction phase
requires).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl
import scipy.sparse as sp
from scipy.optimize import least_squares

#: Magnetic flux quantum h/2e in Wb.
PHI0 = 2.067833848e-15
#: Planck constant in J s.
PLANCK = 6.62607015e-34

DEFAULT_EJ_GHZ = 200.0
DEFAULT_EJ_OVER_EC = 75.0
DEFAULT_CUTOFF = 12
#: Flux offsets (from f = 0.5) used for the persistent-current fit.
FIT_OFFSETS = (0.001, 0.003)
FIT_RMS_TOL = 1e-3


class SpectrumError(RuntimeError):
    """Raised when the numerical spectrum cannot be trusted."""


@dataclass(frozen=True)
class JunctionSet:
    """Normalized junction areas of one fabricated qubit.

    ``alpha`` is the small-junction area, ``beta1``/``beta2`` the two large
    junctions, all relative to the unit junction whose Josephson energy is
    ``ej`` (GHz). Capacitances and critical currents scale with area.
    """

    alpha: float
    beta1: float = 1.0
    beta2: float = 1.0
    ej_over_ec: float = DEFAULT_EJ_OVER_EC
    ej: float = DEFAULT_EJ_GHZ

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise ValueError(f"alpha must exceed 0.5 for a double well, got {self.alpha}")
        for name in ("beta1", "beta2", "ej_over_ec", "ej"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def ec(self) -> float:
        return self.ej / self.ej_over_ec


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    basis_size: int

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])


@dataclass(frozen=True)
class QubitParams:
    """Two-level parameters: tunneling energy and flux slope, both in GHz.

    ``ip`` is the energy slope 2 Ip Phi0 per unit frustration, so the bias is
    ``eps = ip * (f - 0.5)``.
    """

    delta: float
    ip: float

    def __post_init__(self):
        if not (self.delta > 0 and self.ip > 0):
            raise ValueError(f"delta and ip must be positive, got {self.delta}, {self.ip}")

    @property
    def ip_amperes(self) -> float:
        return ip_to_amperes(self.ip)


def ip_to_amperes(slope_ghz: float) -> float:
    """Persistent current in A from the slope 2 Ip Phi0 (GHz per unit f)."""
    return slope_ghz * 1e9 * PLANCK / (2.0 * PHI0)


def potential(phi_p, phi_m, f, alpha):
    """Reduced potential U/E_J for symmetric large junctions."""
    return (
        2.0
        + alpha
        - np.cos(phi_p + phi_m)
        - np.cos(phi_p - phi_m)
        - alpha * np.cos(2.0 * np.pi * f - 2.0 * phi_m)
    )


def junction_potential(phi_p, phi_m, f, j: JunctionSet):
    """Potential in GHz for arbitrary junction areas."""
    return j.ej * (
        j.beta1 * (1.0 - np.cos(phi_p + phi_m))
        + j.beta2 * (1.0 - np.cos(phi_p - phi_m))
        + j.alpha * (1.0 - np.cos(2.0 * np.pi * f - 2.0 * phi_m))
    )


def _check_alpha(alpha):
    if not alpha > 0.5:
        raise ValueError(f"no double well for alpha={alpha} (need alpha > 0.5)")


def potential_minima(alpha: float) -> tuple[float, float]:
    """Well positions (-phi_m*, +phi_m*) at phi_p = 0, f = 0.5."""
    _check_alpha(alpha)
    phi = float(np.arccos(1.0 / (2.0 * alpha)))
    return -phi, phi


def barrier_height(alpha: float) -> float:
    """Intra-cell tunneling barrier E_t/E_J."""
    _check_alpha(alpha)
    return -2.0 + 2.0 * alpha + 1.0 / (2.0 * alpha)


def potential_gradient(alpha: float) -> float:
    """Approximate (dU/df)/E_J at the well bottom."""
    _check_alpha(alpha)
    return 2.0 * np.pi * np.sqrt(1.0 - 1.0 / (2.0 * alpha) ** 2)


def _kinetic_diagonal(j: JunctionSet, cutoff: int) -> np.ndarray:
    # 4 Ec n^T A^-1 n, A the capacitance matrix over the two island phases
    a = np.array([[j.beta1 + j.alpha, -j.alpha], [-j.alpha, j.beta2 + j.alpha]])
    ainv = np.linalg.inv(a)
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    kin = ainv[0, 0] * n1 * n1 + 2.0 * ainv[0, 1] * n1 * n2 + ainv[1, 1] * n2 * n2
    return (4.0 * j.ec * kin).ravel()


def hamiltonian_band(j: JunctionSet, f: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Upper banded storage (scipy ``eig_banded`` layout) of the Hamiltonian.

    Index ``I = (n1 + c) * m + (n2 + c)`` with ``m = 2c + 1``; the couplings
    sit at offsets 1 (cos phi2), m - 1 (the small junction) and m (cos phi1).
    """
    if cutoff < 5:
        raise ValueError("basis_cutoff must be >= 5")
    m = 2 * cutoff + 1
    dim = m * m
    u = m
    ab = np.zeros((u + 1, dim), dtype=complex)
    ab[u] = _kinetic_diagonal(j, cutoff) + j.ej * (j.beta1 + j.beta2 + j.alpha)

    idx = np.arange(dim)
    n1 = idx // m
    n2 = idx % m
    # ab[u + i - k, k] = H[i, k] for i <= k; the column index is k = i + d
    # offset 1: <n1, n2| H |n1, n2 + 1>
    cols = idx[n2 > 0]
    ab[u - 1, cols] = -0.5 * j.beta2 * j.ej
    # offset m: <n1, n2| H |n1 + 1, n2>
    cols = idx[n1 > 0]
    ab[u - m, cols] = -0.5 * j.beta1 * j.ej
    # offset m - 1: <n1, n2| H |n1 + 1, n2 - 1> = -alpha Ej/2 exp(2 pi i f)
    cols = idx[(n1 > 0) & (n2 < m - 1)]
    ab[u - (m - 1), cols] = -0.5 * j.alpha * j.ej * np.exp(2j * np.pi * f)
    return ab


def hamiltonian(j: JunctionSet, f: float, cutoff: int = DEFAULT_CUTOFF) -> sp.csr_matrix:
    """Sparse Hermitian Hamiltonian in GHz, assembled from the banded form."""
    return _band_to_csr(hamiltonian_band(j, f, cutoff))


def _band_to_csr(ab: np.ndarray) -> sp.csr_matrix:
    u = ab.shape[0] - 1
    dim = ab.shape[1]
    diags = [ab[u].real.astype(complex)]
    offsets = [0]
    for d in range(1, u + 1):
        row = ab[u - d, d:]
        if np.any(row):
            diags += [row, row.conj()]
            offsets += [d, -d]
    return sp.diags(diags, offsets, shape=(dim, dim), format="csr")


def _lowest_band_eigs(ab, k, shift, start, tol=1e-13, maxiter=200):
    """Lowest ``k`` eigenpairs by shift-invert subspace iteration.

    The banded Cholesky factorization only succeeds when ``H - shift`` is
    positive definite, which certifies that no eigenvalue lies below the
    shift; otherwise the shift is lowered and the factorization retried.
    """
    u = ab.shape[0] - 1
    h = _band_to_csr(ab)
    width = abs(ab[u]).max()
    for _ in range(60):
        shifted = ab.copy()
        shifted[u] = shifted[u] - shift
        try:
            chol = sl.cholesky_banded(shifted, lower=False, check_finite=False)
            break
        except sl.LinAlgError:
            shift -= max(1.0, 1e-3 * width)
            width *= 2.0
    else:
        raise SpectrumError("could not place shift below the spectrum")

    v = start
    theta_old = None
    for _ in range(maxiter):
        z = sl.cho_solve_banded((chol, False), v, check_finite=False)
        q, _ = np.linalg.qr(z)
        hq = h @ q
        small = q.conj().T @ hq
        theta, y = np.linalg.eigh(0.5 * (small + small.conj().T))
        v = q @ y
        if theta_old is not None and np.all(
            np.abs(theta[:k] - theta_old[:k]) <= tol * np.maximum(1.0, np.abs(theta[:k]))
        ):
            break
        theta_old = theta
    else:
        raise SpectrumError("subspace iteration did not converge")

    resid = h @ v[:, :k] - v[:, :k] * theta[:k]
    scale = max(1.0, float(np.abs(theta[:k]).max()))
    if np.linalg.norm(resid, axis=0).max() > 1e-6 * scale:
        raise SpectrumError("eigenpair residual too large")
    return theta[:k], v


def _cold_shift(j: JunctionSet, f: float) -> float:
    # E0 >= min U (kinetic term is positive); the coarse grid overestimates
    # min U by at most a few GHz, so back off by a safe margin
    g = np.linspace(-np.pi, np.pi, 97)
    pp, pm = np.meshgrid(g, g, indexing="ij")
    return float(junction_potential(pp, pm, f, j).min()) - 0.02 * j.ej


def _start_vectors(dim: int, p: int) -> np.ndarray:
    rng = np.random.default_rng(12345)
    return rng.standard_normal((dim, p)) + 1j * rng.standard_normal((dim, p))


def _solve(j, f, cutoff, n_levels, warm=None):
    ab = hamiltonian_band(j, f, cutoff)
    p = n_levels + 2
    if warm is None:
        shift = _cold_shift(j, f)
        start = _start_vectors(ab.shape[1], p)
    else:
        evals, vecs = warm
        # the ground level drops by about half the gap opening at small bias
        shift = evals[0] - 2.0 * (evals[1] - evals[0]) - 1.0
        start = vecs
    return _lowest_band_eigs(ab, n_levels, shift, start)


def diagonalize(
    j: JunctionSet, f: float, basis_cutoff: int = DEFAULT_CUTOFF, n_levels: int = 2
) -> Spectrum:
    """Lowest ``n_levels`` energies (GHz, ascending) at frustration ``f``."""
    if n_levels < 2:
        raise ValueError("need at least two levels")
    evals, _ = _solve(j, f, basis_cutoff, n_levels)
    if not np.all(np.isfinite(evals)):
        raise SpectrumError("non-finite eigenvalues")
    return Spectrum(np.asarray(evals, dtype=float), (2 * basis_cutoff + 1) ** 2)


def flux_grid() -> np.ndarray:
    offs = np.array(FIT_OFFSETS)
    return np.concatenate([0.5 - offs[::-1], [0.5], 0.5 + offs])


def gaps_on_grid(j: JunctionSet, basis_cutoff: int = DEFAULT_CUTOFF):
    """Qubit gap E1 - E0 on :func:`flux_grid`, warm-started from f = 0.5.

    H(1 - f) is the complex conjugate of H(f), so the gap is even about
    f = 0.5 and only the f > 0.5 half of the grid is diagonalized.
    """
    fs = flux_grid()
    centre = _solve(j, 0.5, basis_cutoff, 2)
    half = {0.0: centre[0][1] - centre[0][0]}
    for off in FIT_OFFSETS:
        evals = _solve(j, 0.5 + off, basis_cutoff, 2, warm=centre)[0]
        half[off] = evals[1] - evals[0]
    gaps = np.array([half[round(abs(f - 0.5), 12)] for f in fs])
    return fs, gaps


def fit_two_level(fs, gaps, delta):
    """Least-squares slope of ``sqrt((ip x)^2 + delta^2)``; returns (ip, rms)."""
    x = np.asarray(fs) - 0.5
    g = np.asarray(gaps)
    mask = x != 0
    ip2 = np.sum(x[mask] ** 2 * (g[mask] ** 2 - delta**2)) / np.sum(x[mask] ** 4)
    ip0 = np.sqrt(max(ip2, 1e-12))

    def resid(p):
        return np.sqrt((p[0] * x) ** 2 + delta**2) - g

    sol = least_squares(resid, [ip0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    ip = abs(float(sol.x[0]))
    rms = float(np.sqrt(np.mean(resid([ip]) ** 2)))
    return ip, rms


def extract_qubit_params(j: JunctionSet, basis_cutoff: int = DEFAULT_CUTOFF) -> QubitParams:
    """Tunneling energy and flux slope of one qubit.

    Raises :class:`SpectrumError` if the gap does not follow the two-level
    hyperbola to ``FIT_RMS_TOL * delta``.
    """
    fs, gaps = gaps_on_grid(j, basis_cutoff)
    delta = float(gaps[fs.size // 2])
    if not delta > 0:
        raise SpectrumError(f"non-positive gap {delta} at f=0.5")
    ip, rms = fit_two_level(fs, gaps, delta)
    if rms > FIT_RMS_TOL * delta:
        raise SpectrumError(f"two-level fit residual {rms:.3g} GHz exceeds {FIT_RMS_TOL} * delta")
    return QubitParams(delta, ip)
