import json
import math

import numpy as np
import pytest

from fragtail.cli import dumps17, main


@pytest.fixture
def uniform2(tmp_path):
    path = tmp_path / "uniform2.json"
    path.write_text(json.dumps(
        {"family": "uniform-k", "params": {"k": 2}, "scale": 1.0}))
    return str(path)


@pytest.fixture
def stable2(tmp_path):
    path = tmp_path / "stable2.json"
    path.write_text(json.dumps({"family": "stable", "params": {"gamma": 2.0}}))
    return str(path)


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_dumps17_round_trip():
    values = [0.1, 1.0 / 3.0, 2.0 ** -52, math.pi, 1e300]
    text = dumps17({"v": values, "flag": True, "none": None})
    parsed = json.loads(text)
    assert parsed["v"] == values  # 17 significant digits round-trip exactly
    assert parsed["flag"] is True and parsed["none"] is None


def test_phi_verb(capsys, uniform2):
    code, out = run_json(capsys, ["phi", "--measure", uniform2, "--x", "2"])
    assert code == 0
    assert abs(out["value"] - 0.5) < 1e-12
    assert out["config"]["x"] == 2.0


def test_psi_verb(capsys, uniform2):
    code, out = run_json(capsys, ["psi", "--measure", uniform2, "--x", "4"])
    assert code == 0
    assert abs(out["psi"] - 2.0) < 1e-9
    assert out["residual"] < 1e-10


def test_hcheck_verb(capsys, stable2):
    code, out = run_json(capsys, ["hcheck", "--measure", stable2,
                                  "--xmax", "1000"])
    assert code == 0
    assert out["pass"] is True
    assert abs(out["tail_sup"] - 0.5) < 0.02


def test_tail_modes_agree_on_shape(capsys, stable2):
    code, exact = run_json(capsys, ["tail", "--measure", stable2,
                                    "--t", "60", "--mode", "exact"])
    assert code == 0 and exact["shape"] is None
    code, expn = run_json(capsys, ["tail", "--measure", stable2,
                                   "--t", "60", "--mode", "lemma9"])
    assert code == 0
    assert expn["shape"]["poly_exponent"] == 2.0
    assert expn["shape"]["exp_terms"] == [[1.0, 2.0]]
    code, fam = run_json(capsys, ["tail", "--measure", stable2,
                                  "--t", "60", "--mode", "example"])
    assert fam["shape"]["exp_terms"] == [[1.0, 2.0]]
    assert abs(expn["log_value"] - fam["log_value"]) < 1e-9


def test_shape_verb(capsys, stable2):
    code, out = run_json(capsys, ["shape", "--measure", stable2])
    assert code == 0
    assert out["shape"]["poly_exponent"] == 2.0


def test_simulate_replay_byte_identical(tmp_path, uniform2):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    argv = ["simulate", "--measure", uniform2, "--alpha", "-1",
            "--runs", "50", "--cutoff", "0.01", "--checkpoints", "1,2",
            "--seed", "9", "--tags", "2"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[1]
    assert header.split(",")[:3] == ["run_id", "extinction_est",
                                     "trunc_error_bound"]


def test_zeta_tag_and_fit_round_trip(tmp_path, capsys, uniform2):
    samples = tmp_path / "zt.csv"
    assert main(["zeta-tag", "--measure", uniform2, "--alpha", "-1",
                 "--n", "20000", "--seed", "4",
                 "--out", str(samples)]) == 0
    shape = tmp_path / "shape.json"
    shape.write_text(json.dumps(
        {"poly_exponent": 0.0, "exp_terms": [[1.0, 1.0]]}))
    code, out = run_json(capsys, [
        "fit", "--samples", str(samples), "--column", "value",
        "--shape", str(shape), "--window", "1e-2,0.3"])
    assert code == 0
    assert "max_abs_residual" in out and out["max_abs_residual"] < 2.0


def test_identity_verb(capsys, uniform2):
    code, out = run_json(capsys, [
        "identity", "--suite", "s2", "--measure", uniform2, "--alpha", "-1",
        "--runs", "4000", "--cutoff", "0.0005", "--checkpoints", "1,2",
        "--seed", "2"])
    assert code == 0
    assert out["pass"] is True
    assert len(out["rows"]) == 2


def test_exit_codes(capsys, uniform2, stable2):
    assert main(["psi", "--measure", uniform2, "--x", "1.0"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "DomainError"
    assert main(["simulate", "--measure", stable2, "--alpha", "-1",
                 "--runs", "5"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "UnsupportedSampling"
    assert main(["phi", "--measure", "/nonexistent.json", "--x", "1"]) == 2
