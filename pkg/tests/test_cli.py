import json

import pytest

from fluxsr import cli
from fluxsr.dynamics.integrate import IntegrationError
from fluxsr.io import read_csv

SMALL_SR = {"g": 50, "kappa": 400, "n_spins": 3, "realizations": 2, "m_values": [1, 2, 3],
            "lambda_max": [25, 250], "n_samples": 100}
SMALL_ENS = {"sigmas": [0.005, 0.02], "n_qubits": 12, "flux_points": 21, "kde_points": 50}


def cfg_file(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def run(tmp_path, command, data, out="out", extra=()):
    code = cli.main([command, "--config", cfg_file(tmp_path, data), "--out", str(tmp_path / out),
                     *extra])
    return code, tmp_path / out


def test_ensemble_outputs(tmp_path):
    code, out = run(tmp_path, "ensemble", SMALL_ENS)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    for tag in ("0.5pct", "2pct"):
        for stem in ("fig3_kde", "fig4_scatter", "fig5_std_vs_flux"):
            assert f"{stem}_{tag}.csv" in names
    header, data = read_csv(out / "fig4_scatter_2pct.csv")
    assert header[:2] == ["index", "alpha"] and data.shape[0] == 12
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "ensemble" and man["seed"] == 0
    assert set(man["files"]) == set(names) - {"manifest.json"}


def test_driven_outputs_and_determinism(tmp_path, capsys):
    code, a = run(tmp_path, "superradiance-driven", SMALL_SR, "a")
    assert code == 0
    code, b = run(tmp_path, "superradiance-driven", SMALL_SR, "b")
    assert code == 0
    names = sorted(p.name for p in a.iterdir())
    assert "fig7a_scaling.csv" in names and "fig7c_lambda_to_m.csv" in names
    assert any(n.startswith("fig7de_timeseries_") for n in names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    man = json.loads((a / "manifest.json").read_text())
    assert 0 < man["integrator"]["step_ns_min"] <= man["integrator"]["step_ns_max"]
    assert man["integrator"]["max_trace_drift"] < 1e-8
    assert man["units"] and man["version"] and len(man["config_hash"]) == 64
    header, data = read_csv(a / "fig7c_lambda_to_m.csv")
    assert header[0] == "lambda_max_MHz" and list(data[:, 0]) == [25.0, 250.0]


def test_seed_changes_output(tmp_path):
    data = dict(SMALL_SR, m_values=[2])
    run(tmp_path, "superradiance-discrete", data, "s0")
    code, s1 = run(tmp_path, "superradiance-discrete", data, "s1", ["--seed", "5"])
    assert code == 0
    s0 = tmp_path / "s0"
    # the M=2 peak sits at t=0 whatever the draw; the decay curves differ
    name = "fig7de_timeseries_2.csv"
    assert (s0 / name).read_bytes() != (s1 / name).read_bytes()
    assert json.loads((s1 / "manifest.json").read_text())["seed"] == 5


def test_out_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert cli.main(["spectrum"]) == 0
    assert (tmp_path / "env_out" / "spectrum.csv").exists()
    assert (tmp_path / "env_out" / "manifest.json").exists()


def test_missing_kappa_is_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "superradiance-discrete", {"g": 50})
    assert code == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and err["field"] == "kappa"


def test_negative_g_is_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "superradiance-discrete", {"g": -50, "kappa": 400})
    assert code == cli.EXIT_CONFIG
    assert json.loads(capsys.readouterr().err)["field"] == "g"


def test_parse_error_reported(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"g": 50\n "kappa": 400}')
    assert cli.main(["spectrum", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "bad.json:2:" in json.loads(capsys.readouterr().err)["message"]


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise IntegrationError("trace drift 1 after 8 halvings")

    monkeypatch.setattr(cli, "run_discrete_m", boom)
    code, _ = run(tmp_path, "superradiance-discrete", SMALL_SR)
    assert code == cli.EXIT_NUMERICAL
    assert json.loads(capsys.readouterr().err)["error"] == "numerical"


def test_validate_elimination_small(tmp_path, capsys):
    data = {"g": 50, "kappa": 400, "validation_n": 1, "photon_cutoff": 4,
            "validation_steps_per_scale": 20, "n_samples": 200}
    code, out = run(tmp_path, "validate-elimination", data)
    assert code == 0
    line = [l for l in capsys.readouterr().out.splitlines() if "max relative deviation" in l][0]
    assert float(line.split(":")[1]) < 0.05
    assert (out / "elimination.csv").exists()


def test_threads_must_be_positive(tmp_path):
    assert cli.main(["spectrum", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert "fluxsr" in capsys.readouterr().out
