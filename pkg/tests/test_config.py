import json

import pytest

from fluxsr.config import ConfigError, RunConfig, from_dict, load_config, parse_json
from fluxsr.dynamics.models import ghz, mhz


def write(tmp_path, text):
    p = tmp_path / "cfg.json"
    p.write_text(text)
    return p


def test_minimal_config_defaults(tmp_path):
    cfg = load_config(write(tmp_path, '{"sigma": 0.01}'))
    assert cfg.mean_alpha == 0.7
    assert cfg.n_qubits == 10000
    assert cfg.kde_bandwidth_ghz == 0.1
    s = cfg.sampling()
    assert (s.sigma_s, s.sigma_l1, s.sigma_l2) == (0.01, 0.01, 0.01)
    assert cfg.kde().bandwidth == 0.1


def test_frequency_defaults_follow_unit():
    mhz_cfg = from_dict({})
    ghz_cfg = from_dict({"frequency_unit": "GHz"})
    assert mhz_cfg.omega_bar == 6000.0 and ghz_cfg.omega_bar == 6.0
    assert mhz_cfg.angular("omega_bar") == pytest.approx(float(ghz(6.0)))
    assert ghz_cfg.angular("delta_omega") == pytest.approx(float(mhz(25.0)))
    assert mhz_cfg.omega_c == mhz_cfg.omega_d == mhz_cfg.omega_bar
    assert mhz_cfg.m_values == list(range(1, 11))
    assert max(mhz_cfg.lambda_max) >= 20 * mhz_cfg.delta_omega


def test_sweep_uses_angular_units():
    cfg = from_dict({"g": 50, "kappa": 400, "realizations": 3})
    sw = cfg.sweep()
    assert sw.template.g == pytest.approx(float(mhz(50)))
    assert sw.template.kappa == pytest.approx(float(mhz(400)))
    assert sw.realizations == 3


def test_missing_kappa_names_field():
    cfg = from_dict({"g": 50})
    with pytest.raises(ConfigError) as info:
        cfg.require(("g", "kappa"), "superradiance")
    assert info.value.field == "kappa"


@pytest.mark.parametrize("data, field", [
    ({"g": -50, "kappa": 400}, "g"),
    ({"kappa": 0}, "kappa"),
    ({"sigma": 0.3}, "sigma"),
    ({"n_spins": "ten"}, "n_spins"),
    ({"realizations": 1.5}, "realizations"),
    ({"frequency_unit": "Hz"}, "frequency_unit"),
    ({"mean_alpha": 0.4}, "mean_alpha"),
    ({"validation_n": 4}, "validation_n"),
])
def test_invalid_values_name_field(data, field):
    with pytest.raises(ConfigError) as info:
        from_dict(data)
    assert info.value.field == field


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as info:
        from_dict({"kapa": 400})
    assert info.value.field == "kapa"
    assert "unknown" in info.value.message


def test_parse_error_has_line_context(tmp_path):
    text = '{\n  "sigma": 0.01,\n  "g": 50,,\n}'
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, text))
    msg = info.value.message
    assert "cfg.json:3:" in msg
    assert '"g": 50,,' in msg and "^" in msg


def test_top_level_must_be_object():
    with pytest.raises(ConfigError):
        parse_json("[1, 2]")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_echo_roundtrip():
    cfg = from_dict({"g": 50, "kappa": 400, "out_dir": "x"})
    echo = cfg.echo()
    assert "out_dir" not in echo
    json.dumps(echo)
    again = from_dict(echo)
    assert again.echo() == echo
    assert isinstance(again, RunConfig)
