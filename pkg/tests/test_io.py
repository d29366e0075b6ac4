import json

import numpy as np
import pytest

from fluxsr.io import (
    canonical_json,
    config_hash,
    fmt,
    read_csv,
    sigma_tag,
    write_csv,
    write_manifest,
    write_timeseries,
)


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(np.float64(1e-20)) == "9.9999999999999995e-21"
    assert fmt(3) == "3" and fmt(np.int64(7)) == "7"
    assert fmt(True) == "1" and fmt(np.bool_(False)) == "0"


def test_csv_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((20, 3))
    p = write_csv(tmp_path / "sub" / "a.csv", ("a", "b", "c"), x)
    header, data = read_csv(p)
    assert header == ["a", "b", "c"]
    assert np.array_equal(data, x)
    raw = p.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_csv_rejects_ragged_rows(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "a.csv", ("a", "b"), [(1, 2, 3)])


def test_tags():
    assert sigma_tag(0.01) == "1pct"
    assert sigma_tag(0.005) == "0.5pct"
    assert sigma_tag(0.02) == "2pct"


def test_config_hash_ignores_key_order():
    a = {"g": 50, "kappa": 400, "m": [1, 2]}
    b = {"m": [1, 2], "kappa": 400, "g": 50}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, g=51))
    assert canonical_json(a) == '{"g":50,"kappa":400,"m":[1,2]}'


def test_manifest_fields(tmp_path):
    p = write_manifest(tmp_path, "spectrum", {"seed": 3, "x": np.float64(0.5)}, 3,
                       {"method": "RK4", "step_ns": 0.01}, [tmp_path / "b.csv", tmp_path / "a.csv"],
                       {"r": np.array([1.0, 2.0])})
    m = json.loads(p.read_text())
    for key in ("tool", "version", "command", "seed", "config", "config_hash", "units",
                "integrator", "files", "provenance", "results"):
        assert key in m
    assert m["files"] == ["a.csv", "b.csv"]
    assert m["integrator"]["step_ns"] == 0.01
    assert m["results"]["r"] == [1.0, 2.0]
    assert m["config_hash"] == config_hash({"seed": 3, "x": 0.5})


def test_timeseries_sidecar(tmp_path):
    t = np.linspace(0, 1, 5)
    ch = {"jpjm": t, "intensity": 2 * t, "excited_count": 1 - t}
    p = write_timeseries(tmp_path / "ts.csv", t, ch, {"M": 3})
    header, data = read_csv(p)
    assert header == ["time_ns", "jpjm", "intensity", "excited_count"]
    assert np.array_equal(data[:, 2], 2 * t)
    meta = json.loads((tmp_path / "ts.json").read_text())
    assert meta["M"] == 3 and "units" in meta
