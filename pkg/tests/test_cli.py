import json
import os

import pytest

from epidde.cli import main


@pytest.fixture
def out(tmp_path):
    return str(tmp_path / "out")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_r0_with_beta_one(capsys, out):
    code, text, _ = run(capsys, "r0", "--config", "defaults", "--set", "beta=1.0", "--out", out)
    assert code == 0
    assert "R0 = 1.76388" in text
    assert "R0 > 1" in text


def test_equilibria_below_threshold(capsys, out):
    code, text, _ = run(capsys, "equilibria", "--set", "beta=0.5", "--out", out)
    assert code == 0
    assert "endemic equilibrium does not exist" in text


def test_validate(capsys, out):
    code, text, _ = run(capsys, "validate", "--out", out)
    assert code == 0
    assert text.count("PASS") == 4


def test_unknown_subcommand(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 1
    assert "usage" in err


def test_no_subcommand(capsys):
    assert run(capsys)[0] == 1


def test_config_error_exit_code(capsys, out):
    code, _, err = run(capsys, "r0", "--set", "tau=-1", "--out", out)
    assert code == 1
    assert "tau" in err


def test_config_file(capsys, tmp_path, out):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("beta = 1.0\nmu = 0.062\n", encoding="utf-8")
    code, text, _ = run(capsys, "--config", str(cfg), "r0", "--out", out)
    assert code == 0 and "1.76388" in text


def test_missing_config_file(capsys, tmp_path, out):
    code, _, err = run(capsys, "r0", "--config", str(tmp_path / "nope.cfg"), "--out", out)
    assert code == 1


def test_numerical_failure_exit_code(capsys, out):
    code, _, err = run(capsys, "simulate", "--set", "p=0.6", "--out", out)
    assert code == 2
    assert "numerical failure" in err


def test_simulate_writes_manifest(capsys, out):
    code, text, _ = run(capsys, "simulate", "--set", "horizon=20", "--out", out)
    assert code == 0
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    names = {f["path"] for f in manifest["files"]}
    assert {"config.txt", "trajectory.csv", "trajectory.svg"} <= names
    assert set(os.listdir(out)) - {"manifest.json"} == names


def test_out_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("EPIDDE_OUT", str(tmp_path / "env"))
    code, _, _ = run(capsys, "r0")
    assert code == 0
    assert os.path.exists(tmp_path / "env" / "manifest.json")


def test_stability_and_critical_delay(capsys, out):
    args = ["--set", "beta=0.2", "--set", "gamma=0.05", "--set", "alpha=0.01", "--out", out]
    code, text, _ = run(capsys, "stability", *args)
    assert code == 0 and "stable_below_tau_star" in text
    code, text, _ = run(capsys, "critical-delay", *args)
    assert code == 0 and "tau* = 8.65448" in text and "holds = True" in text


def test_sweep_commands(capsys, out):
    code, text, _ = run(capsys, "sweep-temperature", "--temps", "0:10:10",
                        "--set", "horizon=30", "--out", out)
    assert code == 0 and text.splitlines()[0] == "T,beta,avg_S,avg_E,avg_I,avg_Q,avg_R,avg_D"
    code, text, _ = run(capsys, "sweep-isolation", "--vary", "tau", "--values", "1:2:1",
                        "--set", "horizon=30", "--jobs", "2", "--out", out)
    assert code == 0 and text.splitlines()[0].startswith("tau,beta")


def test_bifurcation_command(capsys, out):
    code, text, _ = run(capsys, "bifurcation", "--taus", "4:5:1", "--set", "beta=0.2",
                        "--set", "gamma=0.05", "--set", "alpha=0.01",
                        "--set", "horizon=100", "--out", out)
    assert code == 0 and "amplitude" in text
    assert os.path.exists(os.path.join(out, "bifurcation.csv"))


def test_bifurcation_requires_grid(capsys, out):
    assert run(capsys, "bifurcation", "--out", out)[0] == 1


def test_sensitivity_command(capsys, out):
    code, text, _ = run(capsys, "sensitivity", "--parameter", "mu", "--interval", "0.1:0.12",
                        "--set", "horizon=30", "--out", out)
    assert code == 0 and "max MSE" in text


def test_sensitivity_unmapped_without_exploratory(capsys, out):
    code, _, err = run(capsys, "sensitivity", "--parameter", "omega", "--interval", "0:0.02",
                       "--set", "horizon=10", "--out", out)
    assert code == 1
    assert "unmapped" in err


def test_sensitivity_unmapped_with_exploratory(capsys, out):
    code, text, err = run(capsys, "sensitivity", "--parameter", "omega", "--interval",
                          "0:0.02", "--set", "horizon=10", "--exploratory", "--out", out)
    assert code == 0 and "unmapped" in err and "rho" in text


def test_global_flags_after_subcommand(capsys, out):
    code, text, _ = run(capsys, "r0", "--jobs", "2", "--exploratory", "--set", "p=1.5",
                        "--out", out)
    assert code == 0
