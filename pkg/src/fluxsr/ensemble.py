"""Fabrication-variation sampling and global-flux optimization of an ensemble."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .circuit import (
    DEFAULT_CUTOFF,
    DEFAULT_EJ_GHZ,
    DEFAULT_EJ_OVER_EC,
    JunctionSet,
    QubitParams,
    extract_qubit_params,
)

ALPHA_FLOOR = 0.55
BETA_FLOOR = 0.5
MAX_REDRAWS = 1000
DEFAULT_F_RANGE = (0.494, 0.506)
DEFAULT_N_GRID = 121


class EnsembleError(RuntimeError):
    def __init__(self, index, cause):
        super().__init__(f"qubit {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class SamplingConfig:
    """Gaussian junction-area model; sigmas are relative standard deviations."""

    mean_alpha: float = 0.7
    sigma_s: float = 0.01
    sigma_l1: float = 0.01
    sigma_l2: float = 0.01
    n_qubits: int = 10000
    seed: int = 0
    ej: float = DEFAULT_EJ_GHZ
    ej_over_ec: float = DEFAULT_EJ_OVER_EC

    def __post_init__(self):
        for name in ("sigma_s", "sigma_l1", "sigma_l2"):
            v = getattr(self, name)
            if not 0.0 <= v < 0.2:
                raise ValueError(f"{name} must lie in [0, 0.2), got {v}")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if not self.mean_alpha > ALPHA_FLOOR:
            raise ValueError(f"mean_alpha must exceed {ALPHA_FLOOR}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def uniform(cls, sigma: float, **kw) -> "SamplingConfig":
        return cls(sigma_s=sigma, sigma_l1=sigma, sigma_l2=sigma, **kw)


@dataclass(frozen=True)
class KdeConfig:
    bandwidth: float = 0.1

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


@dataclass
class EnsembleSample:
    qubits: list[QubitParams]
    config: SamplingConfig
    junctions: list[JunctionSet] = field(default_factory=list)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([q.delta for q in self.qubits])

    @property
    def ips(self) -> np.ndarray:
        return np.array([q.ip for q in self.qubits])


def _stream(seed: int, index: int) -> np.random.Generator:
    # Philox is counter based: the index occupies the top counter word, so
    # each qubit owns a disjoint stream regardless of evaluation order.
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def sample_junctions(cfg: SamplingConfig, index: int) -> JunctionSet:
    rng = _stream(cfg.seed, index)
    for _ in range(MAX_REDRAWS):
        z = rng.standard_normal(3)
        alpha = cfg.mean_alpha * (1.0 + cfg.sigma_s * z[0])
        beta1 = 1.0 + cfg.sigma_l1 * z[1]
        beta2 = 1.0 + cfg.sigma_l2 * z[2]
        if alpha > ALPHA_FLOOR and beta1 > BETA_FLOOR and beta2 > BETA_FLOOR:
            return JunctionSet(alpha, beta1, beta2, cfg.ej_over_ec, cfg.ej)
    raise RuntimeError(f"more than {MAX_REDRAWS} redraws for qubit {index}; sigmas are absurd")


def _extract(args):
    cfg, basis_cutoff, index = args
    j = sample_junctions(cfg, index)
    try:
        return j, extract_qubit_params(j, basis_cutoff)
    except Exception as exc:  # noqa: BLE001 - re-raised with the index attached
        raise EnsembleError(index, exc) from exc


def build_ensemble(
    cfg: SamplingConfig, basis_cutoff: int = DEFAULT_CUTOFF, workers: int = 1
) -> EnsembleSample:
    jobs = [(cfg, basis_cutoff, i) for i in range(cfg.n_qubits)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract, jobs, chunksize=64))
    else:
        results = [_extract(job) for job in jobs]
    return EnsembleSample(
        qubits=[q for _, q in results], config=cfg, junctions=[j for j, _ in results]
    )


def kde(values, cfg: KdeConfig, query, normalized: bool = False):
    """Gaussian kernel sum ``sum_j K((query - v_j)/h)``.

    With ``normalized=True`` the sum is divided by ``N h`` so it integrates
    to one.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("kde needs at least one value")
    q = np.asarray(query, dtype=float)
    x = (q[..., None] - v) / cfg.bandwidth
    dens = np.exp(-0.5 * x * x).sum(axis=-1) / math.sqrt(2.0 * math.pi)
    if normalized:
        dens = dens / (v.size * cfg.bandwidth)
    return dens


def qubit_frequency(q: QubitParams, f):
    return np.hypot(q.ip * (np.asarray(f) - 0.5), q.delta)


def frequencies(e: EnsembleSample, f) -> np.ndarray:
    """Frequencies of all qubits; shape ``(n_qubits,) + shape(f)``."""
    x = np.asarray(f, dtype=float) - 0.5
    return np.hypot(np.multiply.outer(e.ips, x), e.deltas.reshape((-1,) + (1,) * x.ndim))


def ensemble_std(e: EnsembleSample, f):
    if len(e.qubits) < 2:
        raise ValueError("ensemble_std needs at least two qubits")
    return frequencies(e, f).std(axis=0)


def balancing_flux(q1: QubitParams, q2: QubitParams) -> float:
    """Offset from f = 0.5 at which the two qubit frequencies coincide."""
    if q1.delta == q2.delta:
        return 0.0
    if not (q1.delta - q2.delta) * (q2.ip - q1.ip) > 0:
        raise ValueError("no balancing flux exists: the qubit with larger delta must have smaller ip")
    return math.sqrt((q1.delta**2 - q2.delta**2) / (q2.ip**2 - q1.ip**2))


def optimal_flux(
    e: EnsembleSample, f_range=DEFAULT_F_RANGE, n_grid: int = DEFAULT_N_GRID, rtol: float = 1e-6
) -> tuple[float, float]:
    """Flux minimizing the ensemble frequency spread.

    Grid scan, then golden-section refinement inside the two grid cells
    around the best point. Ties go to the lowest flux; a flat landscape
    returns the range midpoint.
    """
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    lo, hi = f_range
    grid = np.linspace(lo, hi, n_grid)
    stds = ensemble_std(e, grid)
    if np.all(stds == stds[0]):
        mid = 0.5 * (lo + hi)
        return mid, float(ensemble_std(e, mid))
    i = int(np.argmin(stds))
    f_star = float(grid[i])
    if 0 < i < n_grid - 1 and stds[i] < min(stds[i - 1], stds[i + 1]):
        res = minimize_scalar(
            lambda f: float(ensemble_std(e, f)),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            options={"xtol": rtol},
        )
        if grid[i - 1] <= res.x <= grid[i + 1] and res.fun <= stds[i]:
            f_star = float(res.x)
    return f_star, float(ensemble_std(e, f_star))


def fwhm(x, y) -> float:
    """Full width at half maximum of a sampled single-peaked curve."""
    x = np.asarray(x)
    y = np.asarray(y)
    half = 0.5 * y.max()
    above = np.nonzero(y >= half)[0]
    i0, i1 = above[0], above[-1]

    def cross(i, j):
        return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    left = x[0] if i0 == 0 else cross(i0 - 1, i0)
    right = x[-1] if i1 == x.size - 1 else cross(i1, i1 + 1)
    return float(right - left)


def pearson(e: EnsembleSample) -> float:
    return float(np.corrcoef(e.deltas, e.ips)[0, 1])
