"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Errors
go to stderr as one JSON object per line.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import SpectrumError, diagonalize, extract_qubit_params
from .config import ConfigError, RunConfig, from_dict, parse_json
from .dynamics.integrate import IntegrationError
from .dynamics.models import SpinModel
from .ensemble import EnsembleError, ensemble_std
from .experiments import (
    LINEAR_WINDOW,
    QUADRATIC_WINDOW,
    SweepDiagnostics,
    overlay,
    run_broadening_suite,
    run_discrete_m,
    run_driven,
    validate_elimination,
)
from .io import m_tag, sigma_tag, write_csv, write_manifest, write_timeseries

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
DEFAULT_OUT = "fluxsr_out"
OUT_ENV = "FLUXSR_OUT"

COMMANDS = ("spectrum", "ensemble", "optimize-flux", "superradiance-discrete",
            "superradiance-driven", "validate-elimination")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluxsr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fluxsr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "lowest levels and two-level parameters of one qubit",
        "ensemble": "sampled ensembles: Delta density, (Delta, Ip) scatter, spread vs flux",
        "optimize-flux": "flux minimizing the ensemble frequency spread",
        "superradiance-discrete": "peak <J+J-> against M for hand-prepared excitations",
        "superradiance-driven": "Gaussian-drive preparation, then collective decay",
        "validate-elimination": "full cavity model against the eliminated model",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--config", type=Path, help="JSON configuration file")
        s.add_argument("--out", type=Path, help=f"output directory (else ${OUT_ENV}, config, ./{DEFAULT_OUT})")
        s.add_argument("--seed", type=int, help="override the configured seed")
        s.add_argument("--threads", type=int, help="cap on worker processes")
    return p


def resolve(args) -> tuple[RunConfig, Path]:
    data = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}") from None
        data = parse_json(text, str(args.config))
    if args.seed is not None:
        data["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        data["threads"] = args.threads
    cfg = from_dict(data)
    out = args.out or os.environ.get(OUT_ENV) or cfg.out_dir or DEFAULT_OUT
    return cfg, Path(out)


def _slope(result, window):
    try:
        return result.slope(window)
    except ValueError:
        return None


def cmd_spectrum(cfg: RunConfig, out: Path) -> dict:
    j = cfg.junctions()
    spec = diagonalize(j, cfg.flux, cfg.basis_cutoff, cfg.n_levels)
    q = extract_qubit_params(j, cfg.basis_cutoff)
    files = [
        write_csv(out / "spectrum.csv", ("level", "energy_GHz"), enumerate(spec.eigenvalues)),
        write_csv(out / "qubit.csv", ("alpha", "beta1", "beta2", "delta_GHz", "ip_slope_GHz", "ip_amperes"),
                  [(j.alpha, j.beta1, j.beta2, q.delta, q.ip, q.ip_amperes)]),
    ]
    print(f"gap at f={cfg.flux:g}: {spec.gap:.9g} GHz; Delta={q.delta:.9g} GHz, Ip={q.ip_amperes:.6g} A")
    return {"files": files, "results": {"gap_GHz": spec.gap, "delta_GHz": q.delta, "ip_slope_GHz": q.ip}}


def _suite(cfg: RunConfig):
    return run_broadening_suite(
        sigmas=cfg.sigmas, base=cfg.sampling(), kde_cfg=cfg.kde(), f_range=cfg.flux_range,
        n_grid=cfg.flux_points, basis_cutoff=cfg.basis_cutoff, workers=cfg.threads,
        kde_points=cfg.kde_points)


def _std_half(run) -> float:
    return float(ensemble_std(run.ensemble, 0.5)) if len(run.ensemble.qubits) > 1 else 0.0


def cmd_ensemble(cfg: RunConfig, out: Path) -> dict:
    files, summary = [], {}
    for run in _suite(cfg):
        tag = sigma_tag(run.sigma)
        e = run.ensemble
        # the kernel sum as written, and the same divided by N h so it integrates to one
        norm = run.kde_y / (len(e.qubits) * cfg.kde_bandwidth_ghz)
        files.append(write_csv(out / f"fig3_kde_{tag}.csv",
                               ("delta_GHz", "density_unnormalized", "density_normalized"),
                               zip(run.kde_x, run.kde_y, norm)))
        rows = ((i, jn.alpha, jn.beta1, jn.beta2, q.delta, q.ip, q.ip_amperes)
                for i, (jn, q) in enumerate(zip(e.junctions, e.qubits)))
        files.append(write_csv(out / f"fig4_scatter_{tag}.csv",
                               ("index", "alpha", "beta1", "beta2", "delta_GHz", "ip_slope_GHz", "ip_amperes"),
                               rows))
        files.append(write_csv(out / f"fig5_std_vs_flux_{tag}.csv", ("f", "std_GHz"), zip(run.flux, run.std)))
        summary[tag] = {"sigma": run.sigma, "kde_fwhm_GHz": run.kde_width, "pearson_r": run.correlation,
                        "f_opt": run.f_opt, "std_opt_GHz": run.std_opt, "std_half_GHz": _std_half(run)}
        print(f"sigma={run.sigma:g}: KDE FWHM {run.kde_width:.6g} GHz, r={run.correlation:.4f}, "
              f"f*={run.f_opt:.6f}, std(f*)={run.std_opt:.6g} GHz, std(0.5)={summary[tag]['std_half_GHz']:.6g} GHz")
    return {"files": files, "results": summary}


def cmd_optimize_flux(cfg: RunConfig, out: Path) -> dict:
    files, summary = [], {}
    for run in _suite(cfg):
        tag = sigma_tag(run.sigma)
        files.append(write_csv(out / f"fig5_std_vs_flux_{tag}.csv", ("f", "std_GHz"), zip(run.flux, run.std)))
        summary[tag] = {"sigma": run.sigma, "f_opt": run.f_opt, "std_opt_GHz": run.std_opt,
                        "std_half_GHz": _std_half(run)}
        print(f"sigma={run.sigma:g}: optimal flux {run.f_opt:.9f}, std {run.std_opt:.6g} GHz "
              f"(std at 0.5: {summary[tag]['std_half_GHz']:.6g} GHz)")
    rows = [(v["sigma"], v["f_opt"], v["std_opt_GHz"], v["std_half_GHz"]) for v in summary.values()]
    files.append(write_csv(out / "optimal_flux.csv", ("sigma", "f_opt", "std_opt_GHz", "std_half_GHz"), rows))
    return {"files": files, "results": summary}


def _integrator(cfg: RunConfig, diag: SweepDiagnostics) -> dict:
    steps = diag.steps or [float("nan")]
    return {"method": "RK4, fixed step", "steps_per_scale": cfg.steps_per_scale,
            "drive_steps_per_scale": cfg.drive_steps_per_scale,
            "step_ns_min": min(steps), "step_ns_max": max(steps),
            "max_trace_drift": diag.max_trace_drift}


def _scaling_rows(curve, res):
    return ((curve, m, v, s, e) for m, v, s, e in zip(res.m, res.mean, res.std, res.sem))


SCALING_HEADER = ("curve", "M", "max_jpjm_mean", "max_jpjm_std", "max_jpjm_sem")


def _write_series(out, name, series, meta):
    times, ch = series
    return write_timeseries(out / name, times, ch, meta)


def _series_meta(cfg, sweep, step_info, **extra):
    t = sweep.template
    return dict(extra, seed=cfg.seed, realizations=sweep.realizations, integrator=step_info,
                model={"n": t.n, "omega_bar": t.omega_bar, "delta_omega": t.delta_omega,
                       "omega_c": t.omega_c, "g": t.g, "kappa": t.kappa})


def cmd_discrete(cfg: RunConfig, out: Path) -> dict:
    sweep = cfg.sweep()
    diag = SweepDiagnostics()
    res = run_discrete_m(sweep, diag)
    info = _integrator(cfg, diag)
    files = [write_csv(out / "fig7a_scaling.csv", SCALING_HEADER, _scaling_rows("discrete", res))]
    for m, series in res.series.items():
        files.append(_write_series(out, f"fig7de_timeseries_{m_tag(m)}.csv", series,
                                   _series_meta(cfg, sweep, info, curve="discrete", M=m)))
    slopes = {"linear": _slope(res, LINEAR_WINDOW), "quadratic": _slope(res, QUADRATIC_WINDOW)}
    for k, v in slopes.items():
        print(f"{k} window slope: {'n/a' if v is None else format(v, '.4f')}")
    return {"files": files, "integrator": info,
            "results": {"slopes": slopes, "max_jpjm_mean": dict(zip(res.m.astype(int).tolist(), res.mean))}}


def cmd_driven(cfg: RunConfig, out: Path) -> dict:
    sweep = cfg.sweep()
    diag = SweepDiagnostics()
    drv = run_driven(sweep, diag)
    disc = run_discrete_m(sweep, diag)
    info = _integrator(cfg, diag)
    unit = cfg.frequency_unit
    sc = drv.scaling
    # drv.lambdas is sorted; report the configured values rather than round-tripped ones
    lam_cfg = np.sort(np.asarray(cfg.lambda_max, dtype=float))
    files = [
        write_csv(out / "fig7a_scaling.csv", SCALING_HEADER,
                  list(_scaling_rows("discrete", disc)) + list(_scaling_rows("driven", sc))),
        write_csv(out / "fig7c_lambda_to_m.csv",
                  (f"lambda_max_{unit}", "lambda_over_delta_omega", "M_mean", "M_std", "M_eff_mean",
                   "max_jpjm_mean", "max_jpjm_std"),
                  zip(lam_cfg, lam_cfg / cfg.delta_omega if cfg.delta_omega > 0 else np.full(lam_cfg.size, np.inf),
                      drv.m_mean, drv.m_std, drv.m_eff_mean, drv.max_mean, drv.max_std)),
    ]
    for lam, lc, m in zip(drv.lambdas, lam_cfg, drv.m_mean):
        files.append(_write_series(out, f"fig7de_timeseries_driven_{m_tag(round(m, 3))}.csv",
                                   drv.series[float(lam)],
                                   _series_meta(cfg, sweep, info, curve="driven", M=m,
                                                lambda_max=lc, lambda_unit=unit)))
    dev = overlay(sc, disc)
    print(f"M after drive: {', '.join(format(m, '.3f') for m in drv.m_mean)}")
    print(f"monotone in lambda_max: {drv.monotone()}")
    for m, d in dev.items():
        print(f"overlay deviation at M={m}: {d:.4f}")
    return {"files": files, "integrator": info,
            "results": {"monotone": drv.monotone(), "m_mean": drv.m_mean, "overlay": dev,
                        "driven_slope_quadratic": _slope(sc, QUADRATIC_WINDOW)}}


def cmd_validate(cfg: RunConfig, out: Path) -> dict:
    cfg.require(("g", "kappa"), "superradiance")
    model = SpinModel.homogeneous(cfg.validation_n, cfg.angular("omega_bar"), cfg.angular("g"),
                                  cfg.angular("kappa"), omega_c=cfg.angular("omega_c"))
    chk = validate_elimination(model, cfg.photon_cutoff, steps_per_scale=cfg.validation_steps_per_scale,
                               n_samples=cfg.n_samples)
    files = [write_csv(out / "elimination.csv", ("time_ns", "jpjm_full", "jpjm_eliminated"),
                       zip(chk.times, chk.full, chk.eliminated))]
    print(f"max relative deviation: {chk.deviation:.6g}")
    return {"files": files, "results": {"max_relative_deviation": chk.deviation},
            "integrator": {"method": "RK4, fixed step", "step_ns": chk.step,
                           "steps_per_scale": cfg.validation_steps_per_scale,
                           "max_trace_drift": chk.trace_drift}}


HANDLERS = {
    "spectrum": cmd_spectrum,
    "ensemble": cmd_ensemble,
    "optimize-flux": cmd_optimize_flux,
    "superradiance-discrete": cmd_discrete,
    "superradiance-driven": cmd_driven,
    "validate-elimination": cmd_validate,
}
NUMERICAL_ERRORS = (IntegrationError, SpectrumError, EnsembleError, FloatingPointError, np.linalg.LinAlgError)


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps(dict(error=kind, message=message, **extra), sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, out = resolve(args)
        report = HANDLERS[args.command](cfg, out)
        write_manifest(out, args.command, cfg.echo(), cfg.seed, report.get("integrator"),
                       report["files"], report.get("results"))
    except ConfigError as exc:
        _error("config", exc.message, field=exc.field)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        _error("numerical", str(exc), type=type(exc).__name__)
        return EXIT_NUMERICAL
    except ValueError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
