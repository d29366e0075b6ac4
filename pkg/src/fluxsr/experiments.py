"""Figure-reproduction pipelines: broadening suite and superradiance sweeps."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .circuit import DEFAULT_CUTOFF
from .dynamics.blocks import BlockLayout, ae_generator, decay, drive_product, product_populations
from .dynamics.integrate import default_step, evolve
from .dynamics.models import (
    DriveSpec,
    SpinModel,
    ae_collapse,
    ghz,
    h_ae,
    h_full_tavis_cummings,
    m_eff,
    mhz,
    sr_time,
)
from .dynamics.operators import collective_ops, fock_state
from .ensemble import (
    DEFAULT_F_RANGE,
    DEFAULT_N_GRID,
    KdeConfig,
    SamplingConfig,
    build_ensemble,
    ensemble_std,
    fwhm,
    kde,
    optimal_flux,
    pearson,
)

LINEAR_WINDOW = (1, 3)
QUADRATIC_WINDOW = (5, 10)
SWEEP_STEPS_PER_SCALE = 10


@dataclass(frozen=True)
class ModelTemplate:
    """Ensemble parameters from which per-realization frequencies are drawn (rad/ns)."""

    n: int = 10
    omega_bar: float = float(ghz(6.0))
    delta_omega: float = float(mhz(25.0))
    omega_c: float = float(ghz(6.0))
    g: float = float(mhz(50.0))
    kappa: float = float(mhz(400.0))

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.g > 0 and self.kappa > 0):
            raise ValueError("g and kappa must be positive")
        if self.delta_omega < 0:
            raise ValueError("delta_omega must be non-negative")

    def draw(self, seed: int, realization: int) -> SpinModel:
        return SpinModel.sample(self.n, self.omega_bar, self.delta_omega, self.omega_c, self.g,
                                self.kappa, realization_rng(seed, realization))


def realization_rng(seed: int, realization: int) -> np.random.Generator:
    # word 2 separates these streams from the per-qubit fabrication streams
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 1, realization]))


@dataclass(frozen=True)
class SweepConfig:
    template: ModelTemplate = field(default_factory=ModelTemplate)
    m_values: tuple = tuple(range(1, 11))
    lambda_values: tuple = ()
    realizations: int = 100
    seed: int = 0
    omega_d: float | None = None
    steps_per_scale: int = SWEEP_STEPS_PER_SCALE
    drive_steps_per_scale: int = 200
    n_samples: int = 2000
    early_stop: bool = False
    keep_series: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if any(not lam > 0 for lam in self.lambda_values):
            raise ValueError("lambda_max values must be positive")
        if any(not 0 <= m <= self.template.n for m in self.m_values):
            raise ValueError("every M must lie in [0, N]")
        if self.early_stop and self.keep_series:
            raise ValueError("early_stop truncates the time series; disable keep_series")

    @property
    def drive_frequency(self) -> float:
        return self.template.omega_bar if self.omega_d is None else self.omega_d


@dataclass
class ScalingResult:
    """Realization-averaged maximum <J+J-> against the excitation number."""

    m: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    count: int
    series: dict = field(default_factory=dict)

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        if self.m.size > 1 and not np.all(np.diff(self.m) > 0):
            raise ValueError("M values must be strictly increasing")

    @property
    def sem(self) -> np.ndarray:
        return self.std / np.sqrt(self.count)

    def slope(self, window) -> float:
        return loglog_slope(self.m, self.mean, window)


@dataclass
class DrivenResult:
    lambdas: np.ndarray
    m_mean: np.ndarray
    m_std: np.ndarray
    m_eff_mean: np.ndarray
    max_mean: np.ndarray
    max_std: np.ndarray
    count: int
    series: dict = field(default_factory=dict)

    @property
    def scaling(self) -> ScalingResult:
        order = np.argsort(self.m_mean, kind="stable")
        return ScalingResult(self.m_mean[order], self.max_mean[order], self.max_std[order], self.count)

    def monotone(self, tol: float = 0.2) -> bool:
        """M never drops by more than ``tol`` as lambda_max increases."""
        m = self.m_mean[np.argsort(self.lambdas)]
        return bool(np.all(m[1:] >= np.maximum.accumulate(m)[:-1] - tol))


def loglog_slope(m, values, window) -> float:
    """Least-squares slope of log(values) against log(m) for m inside ``window``."""
    m = np.asarray(m, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (m >= window[0]) & (m <= window[1])
    if sel.sum() < 2:
        raise ValueError(f"fewer than two points inside window {window}")
    return float(np.polyfit(np.log(m[sel]), np.log(v[sel]), 1)[0])


def overlay(driven: ScalingResult, discrete: ScalingResult, m_min: int = 5) -> dict:
    """Relative deviation of the driven curve from the discrete one at integer M >= m_min.

    The driven curve is interpolated linearly in log-log coordinates and
    only integers inside its measured M range are compared.
    """
    out = {}
    lo, hi = driven.m.min(), driven.m.max()
    for m, v in zip(discrete.m, discrete.mean):
        if m >= m_min and lo <= m <= hi:
            d = float(np.exp(np.interp(np.log(m), np.log(driven.m), np.log(driven.mean))))
            out[int(m)] = abs(d - v) / v
    return out


@lru_cache(maxsize=32)
def _layout(n: int, nmax: int) -> BlockLayout:
    return BlockLayout(n, nmax)


def _decay_run(model: SpinModel, y0, layout, window, steps, n_samples, early_stop):
    gen = ae_generator(model, layout)
    ts, _ = decay(model, gen, y0, t_end=window, steps_per_scale=steps, n_samples=n_samples,
                  early_stop=early_stop)
    return ts


def _discrete_job(args):
    cfg, m_exc, r = args
    model = cfg.template.draw(cfg.seed, r)
    n = model.n
    layout = _layout(n, m_exc)
    y0 = layout.fock([1] * m_exc + [0] * (n - m_exc))
    window = 10.0 * sr_time(model, max(m_exc, 1))
    ts = _decay_run(model, y0, layout, window, cfg.steps_per_scale, cfg.n_samples, cfg.early_stop)
    return float(np.max(ts["jpjm"])), ts if cfg.keep_series else None, ts.trace_drift, ts.step


def _driven_decay_job(args):
    cfg, psis, window, r = args
    model = cfg.template.draw(cfg.seed, r)
    layout = _layout(model.n, _top_sector(product_populations(psis)))
    ts = _decay_run(model, layout.product(psis), layout, window, cfg.steps_per_scale,
                    cfg.n_samples, cfg.early_stop)
    return float(np.max(ts["jpjm"])), ts if cfg.keep_series else None, ts.trace_drift, ts.step


def _top_sector(pops, floor: float = 1e-14) -> int:
    nz = np.nonzero(np.asarray(pops) > floor)[0]
    return int(nz[-1]) if nz.size else 0


def _map(fn, jobs, workers):
    # results come back in job order, so reductions are order-independent
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _mean_series(runs):
    ts0 = runs[0][1]
    if ts0 is None:
        return None
    stack = {k: np.mean([ts[k] for _, ts, _, _ in runs], axis=0) for k in ts0.channels}
    return ts0.times, stack


@dataclass
class SweepDiagnostics:
    max_trace_drift: float = 0.0
    steps: list = field(default_factory=list)


def run_discrete_m(cfg: SweepConfig, diagnostics: SweepDiagnostics | None = None) -> ScalingResult:
    """Prepare M excited qubits by hand and record the realization-averaged peak <J+J->."""
    ms = sorted(set(int(m) for m in cfg.m_values if m > 0))
    jobs = [(cfg, m, r) for m in ms for r in range(cfg.realizations)]
    res = _map(_discrete_job, jobs, cfg.workers)
    means, stds, series = [], [], {}
    for i, m in enumerate(ms):
        runs = res[i * cfg.realizations : (i + 1) * cfg.realizations]
        peaks = np.array([p for p, _, _, _ in runs])
        means.append(peaks.mean())
        stds.append(peaks.std())
        if cfg.keep_series:
            series[m] = _mean_series(runs)
    if diagnostics is not None:
        diagnostics.max_trace_drift = max([diagnostics.max_trace_drift] + [d for *_, d, _ in res])
        diagnostics.steps.extend(s for *_, s in res)
    return ScalingResult(np.array(ms), np.array(means), np.array(stds), cfg.realizations, series)


def run_driven(cfg: SweepConfig, diagnostics: SweepDiagnostics | None = None) -> DrivenResult:
    """Gaussian pi-area drive from the ground state, then collective decay.

    The decay window at each lambda_max is 10 tau_sr evaluated at the
    realization-averaged excitation count (at least one), so realizations
    share a time grid.
    """
    lams = np.array(sorted(cfg.lambda_values), dtype=float)
    if lams.size == 0:
        raise ValueError("no lambda_max values configured")
    R = cfg.realizations
    omegas = np.array([cfg.template.draw(cfg.seed, r).omegas for r in range(R)])
    ref = cfg.template.draw(cfg.seed, 0)
    jobs, m_mean, m_std, meff = [], [], [], []
    for lam in lams:
        # all realizations share one drive step, set by the widest detuning among them
        d = DriveSpec(float(lam), cfg.drive_frequency)
        psis, _ = drive_product(omegas, d, cfg.drive_steps_per_scale)
        ms = np.sum(np.abs(psis[..., 1]) ** 2, axis=1)
        m_mean.append(ms.mean())
        m_std.append(ms.std())
        meff.append(np.mean([m_eff(w, cfg.drive_frequency, lam) for w in omegas]))
        window = 10.0 * sr_time(ref, max(ms.mean(), 1.0))
        jobs.extend((cfg, psis[r], window, r) for r in range(R))
    res = _map(_driven_decay_job, jobs, cfg.workers)
    max_mean, max_std, series = [], [], {}
    for i, lam in enumerate(lams):
        runs = res[i * R : (i + 1) * R]
        peaks = np.array([p for p, _, _, _ in runs])
        max_mean.append(peaks.mean())
        max_std.append(peaks.std())
        if cfg.keep_series:
            series[float(lam)] = _mean_series(runs)
    if diagnostics is not None:
        diagnostics.max_trace_drift = max([diagnostics.max_trace_drift] + [d for *_, d, _ in res])
        diagnostics.steps.extend(s for *_, s in res)
    return DrivenResult(lams, np.array(m_mean), np.array(m_std), np.array(meff),
                        np.array(max_mean), np.array(max_std), R, series)


def m_eff_estimate(omegas, omega_d: float, lam: float) -> float:
    return m_eff(omegas, omega_d, lam)


def extrapolate_equivalence(target, reference, m_target: float, m_reference: float) -> float:
    """(M_t g_t^2 / kappa_t) / (M_r g_r^2 / kappa_r); any objects with ``g`` and ``kappa``."""
    for x in (target.g, target.kappa, reference.g, reference.kappa, m_target, m_reference):
        if not x > 0:
            raise ValueError("all parameters must be positive")
    return (m_target * target.g**2 / target.kappa) / (m_reference * reference.g**2 / reference.kappa)


@dataclass
class EliminationCheck:
    times: np.ndarray
    full: np.ndarray
    eliminated: np.ndarray
    step: float
    trace_drift: float

    @property
    def deviation(self) -> float:
        """Largest |difference| over the window relative to the peak of the full model."""
        return float(np.max(np.abs(self.eliminated - self.full)) / np.max(np.abs(self.full)))


def validate_elimination(model: SpinModel, photon_cutoff: int = 10, windows: float = 10.0,
                         steps_per_scale: int = 50, n_samples: int = 2000) -> EliminationCheck:
    """Full Tavis-Cummings vs the eliminated model, all qubits excited, cavity empty.

    Both run in the frame rotating at omega_bar over ``windows`` tau_sr(N),
    with a common step set by tau_sr, 1/kappa and 1/g.
    """
    n = model.n
    t_end = windows * sr_time(model, n)
    step = default_step([sr_time(model, n), 1.0 / model.kappa, 1.0 / model.g], steps_per_scale)
    tc = h_full_tavis_cummings(model, photon_cutoff, frame=model.omega_bar)
    rho_q = fock_state([1] * n)
    full, _ = evolve(tc.embed(rho_q), tc.h, tc.collapse, (0.0, t_end),
                     {"jpjm": tc.jp @ tc.jm}, step=step, n_samples=n_samples)
    ops = collective_ops(n)
    ae, _ = evolve(rho_q, h_ae(model, ops), ae_collapse(model, ops), (0.0, t_end),
                   {"jpjm": ops.jp @ ops.jm}, step=step, n_samples=n_samples)
    return EliminationCheck(full.times, full["jpjm"], ae["jpjm"], full.step,
                            max(full.trace_drift, ae.trace_drift))


@dataclass
class BroadeningRun:
    sigma: float
    ensemble: object
    kde_x: np.ndarray
    kde_y: np.ndarray
    kde_width: float
    flux: np.ndarray
    std: np.ndarray
    f_opt: float
    std_opt: float
    correlation: float


def run_broadening_suite(
    sigmas=(0.005, 0.01, 0.02),
    base: SamplingConfig | None = None,
    kde_cfg: KdeConfig | None = None,
    f_range=DEFAULT_F_RANGE,
    n_grid: int = DEFAULT_N_GRID,
    basis_cutoff: int = DEFAULT_CUTOFF,
    workers: int = 1,
    kde_points: int = 400,
) -> list[BroadeningRun]:
    """Ensembles at each sigma with their Delta density, spread-vs-flux scan and optimum.

    ``sigmas=None`` runs ``base`` alone with its own per-junction sigmas;
    the run is then labelled by ``base.sigma_s``.
    """
    base = base or SamplingConfig()
    kde_cfg = kde_cfg or KdeConfig()
    if sigmas is None:
        cfgs = [(base.sigma_s, base)]
    else:
        cfgs = [(s, replace(base, sigma_s=s, sigma_l1=s, sigma_l2=s)) for s in sigmas]
    out = []
    for s, cfg in cfgs:
        e = build_ensemble(cfg, basis_cutoff, workers)
        d = e.deltas
        pad = 5.0 * kde_cfg.bandwidth
        xs = np.linspace(d.min() - pad, d.max() + pad, kde_points)
        ys = kde(d, kde_cfg, xs)
        flux = np.linspace(f_range[0], f_range[1], n_grid)
        if len(e.qubits) > 1:
            std = ensemble_std(e, flux)
            f_opt, std_opt = optimal_flux(e, f_range, n_grid)
            r = pearson(e) if np.ptp(d) > 0 else float("nan")
        else:
            std = np.zeros_like(flux)
            f_opt, std_opt, r = 0.5 * (f_range[0] + f_range[1]), 0.0, float("nan")
        out.append(BroadeningRun(s, e, xs, ys, fwhm(xs, ys), flux, std, f_opt, std_opt, r))
    return out
