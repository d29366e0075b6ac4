"""JSON run configuration with a flat schema.

Superradiance frequencies (``omega_bar``, ``delta_omega``, ``omega_c``,
``g``, ``kappa``, ``lambda_max``, ``omega_d``) are ordinary frequencies in
``frequency_unit`` and are multiplied by 2 pi on load.  Circuit and
ensemble energies (``ej_ghz``, ``kde_bandwidth_ghz``) stay in GHz, which is
the convention of the circuit model.

Keys and defaults
-----------------
General
    frequency_unit "MHz" | "GHz" ("MHz"), seed (0), out_dir (null),
    threads (1)
Circuit
    ej_ghz (200), ej_over_ec (75), basis_cutoff (12), alpha (0.7),
    beta1 (1), beta2 (1), flux (0.5), n_levels (4)
Ensemble
    sigma (0.01), sigmas (null, meaning [sigma]), sigma_s / sigma_l1 /
    sigma_l2 (null, meaning sigma), mean_alpha (0.7), n_qubits (10000),
    kde_bandwidth_ghz (0.1), kde_points (400),
    flux_min (0.494), flux_max (0.506), flux_points (121)
Superradiance
    n_spins (10), omega_bar (6 GHz), delta_omega (25 MHz), omega_c
    (omega_bar), g and kappa (required), m_values (1..n_spins),
    lambda_max (delta_omega times 0.5, 1, 1.5, 2, 3, 5, 10, 20), omega_d
    (omega_bar), realizations (100), steps_per_scale (10),
    drive_steps_per_scale (200), n_samples (2000), photon_cutoff (10),
    validation_n (2), validation_steps_per_scale (50)
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .circuit import DEFAULT_CUTOFF, DEFAULT_EJ_GHZ, DEFAULT_EJ_OVER_EC, JunctionSet
from .dynamics.models import MAX_PHOTONS, MAX_TC_QUBITS
from .ensemble import ALPHA_FLOOR, DEFAULT_F_RANGE, DEFAULT_N_GRID, KdeConfig, SamplingConfig
from .experiments import SWEEP_STEPS_PER_SCALE, ModelTemplate, SweepConfig

UNIT_SCALE = {"MHz": 2.0 * math.pi * 1e-3, "GHz": 2.0 * math.pi}
DEFAULT_LAMBDA_MULTIPLES = (0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0)
SUPERRADIANCE_REQUIRED = ("g", "kappa")
MAX_SPINS = 14


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


@dataclass
class RunConfig:
    frequency_unit: str = "MHz"
    seed: int = 0
    out_dir: str | None = None
    threads: int = 1
    # circuit
    ej_ghz: float = DEFAULT_EJ_GHZ
    ej_over_ec: float = DEFAULT_EJ_OVER_EC
    basis_cutoff: int = DEFAULT_CUTOFF
    alpha: float = 0.7
    beta1: float = 1.0
    beta2: float = 1.0
    flux: float = 0.5
    n_levels: int = 4
    # ensemble
    sigma: float = 0.01
    sigmas: list | None = None
    sigma_s: float | None = None
    sigma_l1: float | None = None
    sigma_l2: float | None = None
    mean_alpha: float = 0.7
    n_qubits: int = 10000
    kde_bandwidth_ghz: float = 0.1
    kde_points: int = 400
    flux_min: float = DEFAULT_F_RANGE[0]
    flux_max: float = DEFAULT_F_RANGE[1]
    flux_points: int = DEFAULT_N_GRID
    # superradiance, in frequency_unit
    n_spins: int = 10
    omega_bar: float | None = None
    delta_omega: float | None = None
    omega_c: float | None = None
    g: float | None = None
    kappa: float | None = None
    m_values: list | None = None
    lambda_max: list | None = None
    omega_d: float | None = None
    realizations: int = 100
    steps_per_scale: int = SWEEP_STEPS_PER_SCALE
    drive_steps_per_scale: int = 200
    n_samples: int = 2000
    photon_cutoff: int = 10
    validation_n: int = 2
    validation_steps_per_scale: int = 50

    # -- derived objects ---------------------------------------------------
    @property
    def scale(self) -> float:
        return UNIT_SCALE[self.frequency_unit]

    def angular(self, name: str) -> float:
        return float(getattr(self, name)) * self.scale

    def junctions(self) -> JunctionSet:
        return JunctionSet(self.alpha, self.beta1, self.beta2, self.ej_over_ec, self.ej_ghz)

    def sampling(self, sigma: float | None = None) -> SamplingConfig:
        if sigma is not None:
            s = (sigma, sigma, sigma)
        else:
            s = tuple(self.sigma if v is None else v for v in (self.sigma_s, self.sigma_l1, self.sigma_l2))
        return SamplingConfig(self.mean_alpha, *s, n_qubits=self.n_qubits, seed=self.seed,
                              ej=self.ej_ghz, ej_over_ec=self.ej_over_ec)

    def sigma_list(self) -> list:
        return list(self.sigmas) if self.sigmas is not None else [self.sigma]

    def kde(self) -> KdeConfig:
        return KdeConfig(self.kde_bandwidth_ghz)

    @property
    def flux_range(self) -> tuple:
        return (self.flux_min, self.flux_max)

    def template(self) -> ModelTemplate:
        self.require(SUPERRADIANCE_REQUIRED, "superradiance")
        return ModelTemplate(self.n_spins, self.angular("omega_bar"), self.angular("delta_omega"),
                             self.angular("omega_c"), self.angular("g"), self.angular("kappa"))

    def sweep(self, workers: int | None = None) -> SweepConfig:
        return SweepConfig(
            template=self.template(),
            m_values=tuple(int(m) for m in self.m_values),
            lambda_values=tuple(float(x) * self.scale for x in self.lambda_max),
            realizations=self.realizations,
            seed=self.seed,
            omega_d=self.angular("omega_d"),
            steps_per_scale=self.steps_per_scale,
            drive_steps_per_scale=self.drive_steps_per_scale,
            n_samples=self.n_samples,
            workers=self.threads if workers is None else workers,
        )

    def require(self, names, command: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(name, f"required for {command} commands")

    def echo(self) -> dict:
        """Resolved configuration, in the declared units, for the manifest."""
        d = asdict(self)
        d.pop("out_dir")
        return d


_INT = {"seed", "threads", "basis_cutoff", "n_levels", "n_qubits", "kde_points", "flux_points",
        "n_spins", "realizations", "steps_per_scale", "drive_steps_per_scale", "n_samples",
        "photon_cutoff", "validation_n", "validation_steps_per_scale"}
_LISTS = {"sigmas", "m_values", "lambda_max"}
_STR = {"frequency_unit", "out_dir"}
_POSITIVE = {"ej_ghz", "ej_over_ec", "beta1", "beta2", "kde_bandwidth_ghz", "omega_bar", "g",
             "kappa", "omega_c", "omega_d", "threads", "basis_cutoff", "n_qubits", "kde_points",
             "n_spins", "realizations", "steps_per_scale", "drive_steps_per_scale",
             "photon_cutoff", "validation_n", "validation_steps_per_scale"}


def parse_json(text: str, source: str = "<config>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        caret = " " * max(exc.colno - 1, 0) + "^"
        raise ConfigError(
            "<parse>", f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}\n    {caret}"
        ) from None
    if not isinstance(data, dict):
        raise ConfigError("<parse>", f"{source}: top level must be a JSON object")
    return data


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc.strerror}") from None
    return from_dict(parse_json(text, str(p)))


def from_dict(data: dict) -> RunConfig:
    """Check types and ranges, fill defaults and validate the owning objects."""
    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown key")
    for key, v in data.items():
        _check_type(key, v)
    cfg = RunConfig(**data)
    if cfg.frequency_unit not in UNIT_SCALE:
        raise ConfigError("frequency_unit", f"must be one of {sorted(UNIT_SCALE)}")
    per_unit = 1e3 if cfg.frequency_unit == "MHz" else 1.0
    if cfg.omega_bar is None:
        cfg.omega_bar = 6.0 * per_unit
    if cfg.delta_omega is None:
        cfg.delta_omega = 0.025 * per_unit
    if cfg.omega_c is None:
        cfg.omega_c = cfg.omega_bar
    if cfg.omega_d is None:
        cfg.omega_d = cfg.omega_bar
    if cfg.m_values is None:
        cfg.m_values = list(range(1, cfg.n_spins + 1))
    if cfg.lambda_max is None:
        cfg.lambda_max = [k * cfg.delta_omega for k in DEFAULT_LAMBDA_MULTIPLES]
    _check_ranges(cfg)
    _check_objects(cfg)
    return cfg


def _check_type(key, v):
    if v is None:
        return
    if key in _STR:
        ok = isinstance(v, str)
    elif key in _LISTS:
        ok = isinstance(v, list) and all(_is_number(x) for x in v)
        if ok and key == "m_values":
            ok = all(float(x).is_integer() for x in v)
    elif key in _INT:
        ok = _is_number(v) and float(v).is_integer()
    else:
        ok = _is_number(v)
    if not ok:
        raise ConfigError(key, f"invalid value {v!r}")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_ranges(cfg: RunConfig):
    for name in _POSITIVE:
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            raise ConfigError(name, f"must be positive, got {v}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if cfg.delta_omega < 0:
        raise ConfigError("delta_omega", "must be non-negative")
    if not cfg.flux_min < cfg.flux_max:
        raise ConfigError("flux_min", "must be below flux_max")
    if cfg.flux_points < 3:
        raise ConfigError("flux_points", "must be at least 3")
    if cfg.n_levels < 2:
        raise ConfigError("n_levels", "must be at least 2")
    if cfg.n_samples < 2:
        raise ConfigError("n_samples", "must be at least 2")
    if cfg.n_spins > MAX_SPINS:
        raise ConfigError("n_spins", f"must not exceed {MAX_SPINS}")
    if not 1 <= cfg.validation_n <= min(3, MAX_TC_QUBITS):
        raise ConfigError("validation_n", "must lie in [1, 3]")
    if cfg.photon_cutoff > MAX_PHOTONS:
        raise ConfigError("photon_cutoff", f"must not exceed {MAX_PHOTONS}")
    if not cfg.mean_alpha > ALPHA_FLOOR:
        raise ConfigError("mean_alpha", f"must exceed {ALPHA_FLOOR}")
    for name in ("sigma", "sigma_s", "sigma_l1", "sigma_l2"):
        v = getattr(cfg, name)
        if v is not None and not 0 <= v < 0.2:
            raise ConfigError(name, f"must lie in [0, 0.2), got {v}")
    if cfg.sigmas is not None:
        if any(not 0 <= v < 0.2 for v in cfg.sigmas):
            raise ConfigError("sigmas", "values must lie in [0, 0.2)")
        if not cfg.sigmas:
            raise ConfigError("sigmas", "must not be empty")
        if any(v is not None for v in (cfg.sigma_s, cfg.sigma_l1, cfg.sigma_l2)):
            raise ConfigError("sigmas", "cannot be combined with per-junction sigmas")
    if any(not x > 0 for x in cfg.lambda_max):
        raise ConfigError("lambda_max", "values must be positive")
    if any(not 0 < m <= cfg.n_spins for m in cfg.m_values):
        raise ConfigError("m_values", f"values must lie in [1, n_spins={cfg.n_spins}]")


def _check_objects(cfg: RunConfig):
    checks = [("alpha", cfg.junctions), ("kde_bandwidth_ghz", cfg.kde)]
    checks += [("sigmas" if cfg.sigmas is not None else "sigma", lambda s=s: cfg.sampling(s))
               for s in (cfg.sigmas or [None])]
    if cfg.g is not None and cfg.kappa is not None:
        checks.append(("superradiance", cfg.sweep))
    for name, build in checks:
        try:
            build()
        except ValueError as exc:
            raise ConfigError(name, str(exc)) from None
