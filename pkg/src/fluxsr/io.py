"""Deterministic CSV and manifest output.

Numbers are written with 17 significant digits and a '.' decimal point, so
identical inputs give byte-identical files.  Manifests carry no timestamps
for the same reason.
"""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__

UNITS = {
    "config_frequency": "ordinary frequency in the declared frequency_unit (MHz or GHz)",
    "internal_frequency": "angular frequency, rad/ns",
    "time": "ns",
    "circuit_energy": "E/h in GHz",
    "intensity": "2 g^2/kappa * omega_c * <J+J->, in rad^2/ns^2 (units of hbar)",
}


def fmt(x) -> str:
    """17 significant digits, locale independent; integers stay integral."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_csv(path):
    """Header and float columns of a file written by write_csv."""
    text = Path(path).read_text(encoding="ascii").splitlines()
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]], dtype=float)
    return header, data.reshape(-1, len(header))


def sigma_tag(sigma: float) -> str:
    """Relative sigma as a file-name tag, e.g. 0.01 -> '1pct', 0.005 -> '0.5pct'."""
    return ("%.6g" % (100.0 * sigma)) + "pct"


def m_tag(m: float) -> str:
    return str(int(m)) if float(m).is_integer() else "%.3f" % m


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(_plain(cfg)).encode()).hexdigest()


def provenance() -> str:
    return (f"fluxsr {__version__}; numpy {np.__version__}; "
            f"python {platform.python_version()}; {_backend()} kernels")


def _backend() -> str:
    from .kernels import BACKEND

    return BACKEND


def write_manifest(out_dir, command: str, config: dict, seed: int, integrator: dict | None = None,
                   files=(), results: dict | None = None) -> Path:
    """Write manifest.json next to the CSVs of one run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "fluxsr",
        "version": __version__,
        "command": command,
        "seed": int(seed),
        "config": config,
        "config_hash": config_hash(config),
        "units": UNITS,
        "integrator": integrator or {"method": "none"},
        "files": sorted(Path(f).name for f in files),
        "provenance": provenance(),
        "results": results or {},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n", encoding="ascii")
    return path


def write_timeseries(path, times, channels: dict, meta: dict) -> Path:
    """Time series CSV plus a JSON metadata file with the same stem."""
    cols = ("jpjm", "intensity", "excited_count")
    rows = zip(times, *(channels[c] for c in cols))
    p = write_csv(path, ("time_ns",) + cols, rows)
    p.with_suffix(".json").write_text(
        json.dumps(_plain(dict(meta, units=UNITS)), indent=2, sort_keys=True) + "\n", encoding="ascii")
    return p


def _plain(obj):
    # JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj
