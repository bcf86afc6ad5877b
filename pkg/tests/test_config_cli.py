import json
import os

import numpy as np
import pytest

from plateflow.cli import _dumps, main, write_csv, write_json
from plateflow.config import ConfigError, ExperimentConfig, parse_config


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_defaults_applied_on_minimal_config(tmp_path):
    path = _write(tmp_path, "[geometry]\nn_x = 16\nn_z = 16\n")
    cfg = parse_config(path)
    assert cfg.modes.m == 12 and cfg.modes.n == 8
    assert cfg.physics.nu == 1.0
    assert cfg.integration.dt == 1e-3


def test_negative_viscosity_names_field(tmp_path):
    path = _write(tmp_path, "[physics]\nnu = -2.0\n")
    with pytest.raises(ConfigError, match="physics.nu must be positive"):
        parse_config(path)


def test_unknown_key_rejected(tmp_path):
    path = _write(tmp_path, "[physics]\nviscoty = 1.0\n")
    with pytest.raises(ConfigError, match="viscoty"):
        parse_config(path)


def test_unknown_section_rejected(tmp_path):
    path = _write(tmp_path, "[physic]\nnu = 1.0\n")
    with pytest.raises(ConfigError, match="physic"):
        parse_config(path)


def test_type_errors_are_reported(tmp_path):
    path = _write(tmp_path, "[modes]\nm = twelve\n")
    with pytest.raises(ConfigError, match="modes.m"):
        parse_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(str(tmp_path / "nope.ini"))


def test_case_sensitive_keys(tmp_path):
    path = _write(tmp_path, "[integration]\nT = 3.5\n")
    assert parse_config(path).integration.T == 3.5


# -- serialization ----------------------------------------------------------

def test_json_dumper_is_deterministic_and_parseable():
    obj = {"b": 1.0 / 3.0, "a": [1, True, None, "x"], "c": {"z": 2}}
    s1, s2 = _dumps(obj), _dumps(obj)
    assert s1 == s2
    back = json.loads(s1)
    assert back["a"] == [1, True, None, "x"]
    assert abs(back["b"] - 1.0 / 3.0) < 1e-16
    # 17 significant digits survive a float round trip
    assert float("%.17g" % (1.0 / 3.0)) == 1.0 / 3.0


def test_csv_writer_format(tmp_path):
    path = str(tmp_path / "x.csv")
    write_csv(path, ("a", "b"), [(1, 0.5), (2, 1.0 / 3.0)])
    raw = open(path, "rb").read()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").split("\n")
    assert lines[0] == "a,b"
    assert float(lines[2].split(",")[1]) == 1.0 / 3.0


# -- CLI --------------------------------------------------------------------

def test_cli_bad_config_exits_2(tmp_path):
    path = _write(tmp_path, "[physics]\nnu = -1\n")
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) == 2


def test_cli_unknown_command_exits_2(capsys):
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_cli_modes_and_assemble(tmp_path):
    out = str(tmp_path / "out")
    assert main(["modes", "--out", out]) == 0
    assert main(["assemble", "--out", out]) == 0
    mods = json.load(open(os.path.join(out, "modes.json")))
    assert mods["m"] == 12 and mods["n"] == 8
    asm = json.load(open(os.path.join(out, "assemble.json")))
    assert asm["mass_min_eigenvalue"] > 0
    lines = open(os.path.join(out, "modes.csv")).read().splitlines()
    assert lines[0] == "kind,index,eigenvalue,residual"
    assert len(lines) == 1 + 12 + 8


def test_cli_simulate_deterministic(tmp_path):
    cfgp = _write(tmp_path, "[integration]\nT = 0.1\n")
    o1, o2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["simulate", "--config", cfgp, "--out", o1, "--seed", "5"]) == 0
    assert main(["simulate", "--config", cfgp, "--out", o2, "--seed", "5"]) == 0
    for name in ("trajectory.csv", "simulate.json"):
        b1 = open(os.path.join(o1, name), "rb").read()
        b2 = open(os.path.join(o2, name), "rb").read()
        assert b1 == b2
    header = open(os.path.join(o1, "trajectory.csv")).readline().strip()
    assert header == ("t,E0,E,Estar,dissipation_integral,balance_residual,"
                      "norm_alpha,norm_beta,norm_betadot,mean_u")


def test_cli_simulate_zero_horizon(tmp_path):
    cfgp = _write(tmp_path, "[integration]\nT = 0\n")
    out = str(tmp_path / "o")
    assert main(["simulate", "--config", cfgp, "--out", out]) == 0
    lines = open(os.path.join(out, "trajectory.csv")).read().splitlines()
    assert len(lines) == 2


def test_cli_spectrum_uses_cache_transparently(tmp_path):
    out = str(tmp_path / "out")
    assert main(["spectrum", "--out", out]) == 0
    summary = json.load(open(os.path.join(out, "spectrum.json")))
    assert summary["stable"] and summary["contractive"]
    lines = open(os.path.join(out, "spectrum.csv")).read().splitlines()
    assert lines[0] == "re,im"
    assert len(lines) == 1 + 12 + 2 * 8
    assert os.path.isdir(os.path.join(out, "modes_cache"))


def test_write_json_trailing_newline(tmp_path):
    path = str(tmp_path / "x.json")
    write_json(path, {"x": 1})
    assert open(path, "rb").read() == b'{"x":1}\n'
