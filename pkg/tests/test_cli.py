import json
import os
import subprocess
import sys

import pytest

from qfound.cli import dispatch


def run(args, tmp_path=None):
    return dispatch(args + ["--quiet"])


def test_no_arguments_is_usage_error(capsys):
    assert dispatch([]) == 2
    assert capsys.readouterr().err.startswith("qfound: error:")


def test_unknown_subcommand():
    assert dispatch(["ks", "frobnicate"]) == 2


def test_missing_file():
    assert dispatch(["ks", "validate", "--rays", "/nonexistent.rays", "--quiet"]) == 2


@pytest.mark.parametrize("argv", [
    ["hardy", "run"],
    ["hardy", "lhv"],
    ["fr", "run"],
    ["fr", "run", "--mode", "contextual", "--expect", "consistent"],
    ["fr", "prob"],
    ["ks", "validate"],
    ["ks", "dim2", "--points", "40"],
    ["hepp", "run", "--theta", "pi/2", "--sites", "6"],
    ["hepp", "bell"],
    ["way", "build"],
    ["fv", "nosignal"],
    ["presheaf", "roundtrip", "--rays", "bug.rays"],
])
def test_commands_pass(argv):
    assert run(argv) == 0


def test_uncolorable_is_not_an_error():
    assert run(["ks", "color"]) == 0


def test_bad_source_file_fails():
    assert run(["ks", "validate", "--rays", "ks117_source.rays"]) == 1


def test_wrong_expectation_fails():
    assert run(["fr", "run", "--expect", "consistent"]) == 1


def test_dim2_points_must_be_multiple_of_four():
    assert dispatch(["ks", "dim2", "--points", "42"]) == 2


def test_report_layout_and_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert dispatch(["fr", "prob", "--seed", "7", "--report", str(p), "--quiet"]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert list(ra) == ["command", "parameters", "checks", "elapsed_ms", "seed"]
    assert ra["command"] == "fr prob" and ra["seed"] == 7
    ra.pop("elapsed_ms"), rb.pop("elapsed_ms")
    assert ra == rb
    assert a.read_text().endswith("\n")


def test_global_flags_after_subcommand(tmp_path):
    out = tmp_path / "r.json"
    assert dispatch(["hardy", "run", "--tol", "1e-6", "--report", str(out), "--quiet"]) == 0
    assert json.loads(out.read_text())["parameters"]["tol"] == 1e-6


def test_accept_single_suite(capsys):
    assert dispatch(["accept", "hepp"]) == 0
    assert "criterion 11" in capsys.readouterr().out


def test_accept_unknown_suite():
    assert dispatch(["accept", "nope", "--quiet"]) == 2


def test_accept_missing_data(tmp_path):
    assert dispatch(["accept", "ks", "--data-dir", str(tmp_path), "--quiet"]) == 1


def test_console_script_plain_output():
    env = {**os.environ, "NO_COLOR": "1"}
    p = subprocess.run([sys.executable, "-m", "qfound", "hardy", "lhv"], capture_output=True, text=True, env=env)
    assert p.returncode == 0
    assert "\033[" not in p.stdout and p.stdout.strip().endswith("0 failed")
