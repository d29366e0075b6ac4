"""Excitation-number block representation for collective decay.

Generators of the form sum_j e_j sigma_z^(j) + c J+J- with collective
loss gamma D[J-] never couple density-matrix blocks of different
excitation number to the number-diagonal ones, and loss only moves
population downward.  Evolving the diagonal blocks rho_n alone is
therefore exact for every number-conserving observable (<J+J->,
populations, excitation count), at C(N,n)^2 entries per block instead of
4^N.  Blocks above ``nmax`` may be dropped once their population is
negligible, since nothing flows upward.
"""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .. import kernels
from .integrate import DEFAULT_SAMPLES, default_step, integrate
from .models import (
    DriveSpec,
    SpinModel,
    dispersive_beta,
    dispersive_rate,
    shift_coefficient,
    superradiant_rate,
    sr_time,
)

POPULATION_FLOOR = 1e-14
DECAY_WINDOW = 10.0


class BlockLayout:
    """Index tables for sectors 0..nmax of an N-qubit register."""

    def __init__(self, n_sites: int, nmax: int | None = None):
        if n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        nmax = n_sites if nmax is None else nmax
        if not 0 <= nmax <= n_sites:
            raise ValueError("nmax must lie in [0, n_sites]")
        self.n_sites = n_sites
        self.nmax = nmax
        self.states = []
        for n in range(nmax + 1):
            codes = sorted(sum(1 << j for j in c) for c in combinations(range(n_sites), n))
            self.states.append(np.array(codes, dtype=np.int64))
        self.bits = [((s[:, None] >> np.arange(n_sites)) & 1).astype(np.int8) for s in self.states]
        self.dims = np.array([s.size for s in self.states], dtype=np.intp)
        self.offsets = np.concatenate([[0], np.cumsum(self.dims**2)]).astype(np.intp)
        self.size = int(self.offsets[-1])
        self.doffsets = np.concatenate([[0], np.cumsum(self.dims)]).astype(np.intp)
        pos = {int(code): i for s in self.states for i, code in enumerate(s)}
        up, low, upoffs, lowoffs = [], [], [0], [0]
        for n, s in enumerate(self.states):
            lo = [[pos[int(x) ^ (1 << j)] for j in range(n_sites) if (x >> j) & 1] for x in s]
            u = []
            if n < nmax:
                u = [[pos[int(x) | (1 << j)] for j in range(n_sites) if not (x >> j) & 1] for x in s]
            up.append(np.array(u, dtype=np.int32).ravel())
            low.append(np.array(lo, dtype=np.int32).ravel())
            upoffs.append(upoffs[-1] + up[-1].size)
            lowoffs.append(lowoffs[-1] + low[-1].size)
        self.up = np.concatenate(up).astype(np.int32)
        self.low = np.concatenate(low).astype(np.int32)
        self.upoffs = np.array(upoffs[:-1], dtype=np.intp)
        self.lowoffs = np.array(lowoffs[:-1], dtype=np.intp)
        xo = [0, 0]
        for n in range(1, nmax + 1):
            xo.append(xo[-1] + self.dims[n - 1] * self.dims[n])
        self.xoffsets = np.array(xo[:-1], dtype=np.intp)
        self.xsize = int(xo[-1])
        self.diag_index = np.concatenate(
            [self.offsets[n] + np.arange(d) * (d + 1) for n, d in enumerate(self.dims)]
        )

    def block(self, y, n):
        d = self.dims[n]
        return y[self.offsets[n] : self.offsets[n] + d * d].reshape(d, d)

    def site_diagonal(self, site_energies) -> np.ndarray:
        """Diagonal of sum_j e_j sigma_z^(j) in every sector, concatenated."""
        e = np.asarray(site_energies, dtype=float)
        return np.concatenate([(2.0 * b - 1.0) @ e for b in self.bits])

    def populations(self, y) -> np.ndarray:
        return np.array([np.trace(self.block(y, n)).real for n in range(self.nmax + 1)])

    def trace(self, y):
        return complex(y[self.diag_index].sum())

    def hermiticity(self, y) -> float:
        return max(float(np.max(np.abs(b - b.conj().T))) for b in
                   (self.block(y, n) for n in range(self.nmax + 1)))

    def excited(self, y) -> float:
        """Excitation count sum_n n p_n."""
        w = np.repeat(np.arange(self.nmax + 1), self.dims)
        return float(np.dot(w, y[self.diag_index].real))

    def fock(self, bits) -> np.ndarray:
        code = sum(1 << j for j, b in enumerate(bits) if b)
        n = int(sum(bool(b) for b in bits))
        if n > self.nmax:
            raise ValueError("state lies above nmax")
        y = np.zeros(self.size, complex)
        i = int(np.searchsorted(self.states[n], code))
        y[self.offsets[n] + i * (self.dims[n] + 1)] = 1.0
        return y

    def product(self, psis) -> np.ndarray:
        """Blocks of a product of single-qubit pure states (ground, excited amplitudes)."""
        psis = np.asarray(psis, complex)
        y = np.zeros(self.size, complex)
        sites = np.arange(self.n_sites)
        for n in range(self.nmax + 1):
            v = np.prod(psis[sites, self.bits[n]], axis=1)
            y[self.offsets[n] : self.offsets[n + 1]] = np.outer(v, v.conj()).ravel()
        return y

    def to_dense(self, y) -> np.ndarray:
        """Embed the blocks in a 2^N density matrix (cross-sector coherences zero)."""
        dim = 1 << self.n_sites
        rho = np.zeros((dim, dim), complex)
        for n in range(self.nmax + 1):
            s = self.states[n]
            rho[np.ix_(s, s)] = self.block(y, n)
        return rho


def product_populations(psis) -> np.ndarray:
    """Excitation-number distribution of a product state."""
    p = np.ones(1)
    for g, e in np.abs(np.asarray(psis)) ** 2:
        p = np.convolve(p, [g, e])
    return p


def fill_bound(n_sites: int) -> np.ndarray:
    """Lambda_n = max over m <= n of the largest J+J- eigenvalue in sector m, m (N - m + 1)."""
    m = np.arange(n_sites + 1)
    return np.maximum.accumulate(m * (n_sites - m + 1)).astype(float)


class BlockLindblad:
    """Generator sum_j e_j sigma_z^(j) + c J+J- with loss gamma D[J-], on blocks."""

    def __init__(self, layout: BlockLayout, site_energies, c: float, gamma: float, backend=None):
        self.layout = layout
        self.diag = layout.site_diagonal(site_energies)
        self.c = float(c)
        self.gamma = float(gamma)
        self._k = kernels.get_backend(backend)
        self._xbuf = np.zeros(max(layout.xsize, 1), complex)
        self._wbuf = np.zeros(2 * int(max(layout.dims) ** 2), complex)

    def rhs(self, t, y, out):
        L = self.layout
        self._k.block_rhs(y, out, self.diag, self.c, self.gamma, L.n_sites, L.dims, L.offsets,
                          L.doffsets, L.up, L.upoffs, L.low, L.lowoffs, L.xoffsets, self._xbuf,
                          self._wbuf)

    def jpjm(self, y) -> float:
        L = self.layout
        return self._k.block_jpjm(y, L.n_sites, L.dims, L.offsets, L.up, L.upoffs)

    def trace(self, y):
        return self.layout.trace(y)

    def hermiticity(self, y):
        return self.layout.hermiticity(y)


def ae_generator(m: SpinModel, layout: BlockLayout, backend=None) -> BlockLindblad:
    return BlockLindblad(layout, m.detunings / 2.0, shift_coefficient(m), superradiant_rate(m), backend)


def dispersive_generator(m: SpinModel, layout: BlockLayout, photon_number: float = 0.0,
                         backend=None) -> BlockLindblad:
    """Dispersive model in the frame rotating at omega_bar."""
    beta = dispersive_beta(m)
    e = m.detunings / 2.0 + beta * photon_number
    return BlockLindblad(layout, e, beta / 2.0, dispersive_rate(m), backend)


def initial_layout(n_sites: int, populations) -> BlockLayout:
    p = np.asarray(populations)
    nz = np.nonzero(p > POPULATION_FLOOR)[0]
    return BlockLayout(n_sites, int(nz[-1]) if nz.size else 0)


def decay_step(m: SpinModel, excited: float, steps_per_scale: int) -> float:
    """min(tau_sr(M), 1/max|omega_j - omega_bar|) / steps_per_scale."""
    spread = float(np.max(np.abs(m.detunings)))
    return default_step([sr_time(m, max(excited, 1.0)), 1.0 / spread if spread else None],
                        steps_per_scale)


def decay(m: SpinModel, gen: BlockLindblad, y0, excited: float | None = None, t_end=None,
          steps_per_scale: int = 200, n_samples: int = DEFAULT_SAMPLES, early_stop=False,
          step=None):
    """Free collective decay from block state ``y0``.

    The window defaults to DECAY_WINDOW * tau_sr(max(M, 1)) with M the
    initial excitation count.  With ``early_stop`` the run ends once the
    bound sum_n p_n Lambda_n on every future <J+J-> falls below the
    running maximum, so the recorded maximum is unchanged.
    """
    L = gen.layout
    if excited is None:
        excited = L.excited(y0)
    if t_end is None:
        t_end = DECAY_WINDOW * sr_time(m, max(excited, 1.0))
    if step is None:
        step = decay_step(m, excited, steps_per_scale)
    obs = {"jpjm": gen.jpjm, "excited_count": L.excited}
    stop = None
    if early_stop:
        lam = fill_bound(L.n_sites)[: L.nmax + 1]
        best = [-np.inf]

        def stop(t, y, vals):
            best[0] = max(best[0], vals["jpjm"])
            return float(np.dot(L.populations(y), lam)) < best[0]

    ts, y = integrate(gen, y0, (0.0, t_end), step, obs, n_samples, stop)
    ts.channels["intensity"] = 2.0 * m.g**2 / m.kappa * m.omega_c * ts.channels["jpjm"]
    ts.meta.update(excited0=float(excited), window=float(t_end))
    return ts, y


def drive_step(omegas, d: DriveSpec, steps_per_scale: int) -> float:
    spread = float(np.max(np.abs(np.asarray(omegas) - d.omega_d)))
    return default_step([1.0 / d.lambda_max, 1.0 / spread if spread else None], steps_per_scale)


def drive_product(omegas, d: DriveSpec, steps_per_scale: int = 200, psi0=None):
    """Single-qubit states after the drive window, from the ground state by default.

    The drive Hamiltonian is a sum of single-qubit terms and the cavity is
    off, so product states stay product states; every qubit is integrated
    with RK4 at the drive step.  ``omegas`` may carry leading batch axes
    (e.g. realizations).  Returns (psis with shape omegas.shape + (2,), step).
    """
    omegas = np.asarray(omegas, dtype=float)
    t0, t1 = d.window
    step = drive_step(omegas, d, steps_per_scale)
    n_steps = max(1, int(np.ceil((t1 - t0) / step - 1e-9)))
    h = (t1 - t0) / n_steps
    dp = (omegas - d.omega_d) / 2.0
    if psi0 is None:
        g = np.ones_like(dp, dtype=complex)
        e = np.zeros_like(dp, dtype=complex)
    else:
        psi0 = np.broadcast_to(np.asarray(psi0, complex), dp.shape + (2,))
        g, e = psi0[..., 0].copy(), psi0[..., 1].copy()
    lam = d.envelope(t0 + h * np.arange(2 * n_steps + 1) / 2.0) / 2.0

    def f(i, g, e):
        # -i H psi with H = [[-dp, lam], [lam, dp]] on (ground, excited)
        return -1j * (-dp * g + lam[i] * e), -1j * (lam[i] * g + dp * e)

    for i in range(n_steps):
        k1g, k1e = f(2 * i, g, e)
        k2g, k2e = f(2 * i + 1, g + h / 2 * k1g, e + h / 2 * k1e)
        k3g, k3e = f(2 * i + 1, g + h / 2 * k2g, e + h / 2 * k2e)
        k4g, k4e = f(2 * i + 2, g + h * k3g, e + h * k3e)
        g = g + h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g)
        e = e + h / 6 * (k1e + 2 * k2e + 2 * k3e + k4e)
    return np.stack([g, e], axis=-1), h
