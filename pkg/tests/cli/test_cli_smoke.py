import json
import subprocess
from pathlib import Path

import pandas as pd
import pytest


def _run(*args: str, env=None) -> subprocess.CompletedProcess:
    return subprocess.run(["glpp", *args], capture_output=True, text=True, env=env)


def test_glpp_help_exits_zero():
    res = _run("--help")
    assert res.returncode == 0, res.stderr
    assert "glpp" in res.stdout or "Usage" in res.stdout


@pytest.mark.parametrize("command", ["simulate", "exact", "pca-check", "quarterplane", "verify", "families"])
def test_subcommand_help_exits_zero(command):
    res = _run(command, "--help")
    assert res.returncode == 0, res.stderr
    assert "Usage" in res.stdout


def test_glpp_version_exits_zero():
    res = _run("--version")
    assert res.returncode == 0
    assert res.stdout.startswith("glpp version")


def test_exact_geometric_half():
    """ν_2 for geometric(1/2): Z = 16 and ν(+-+-) = 1/4."""
    res = _run("exact", "--L", "2", "--mu0", "geometric:0.5")
    assert res.returncode == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["command"] == "exact"
    assert doc["law"]["Z"] == pytest.approx(16.0, rel=1e-10)
    assert doc["law"]["nu"]["+-+-"]["p"] == pytest.approx(0.25, abs=1e-10)
    assert doc["law"]["nu"]["++--"]["p"] == pytest.approx(0.125, abs=1e-10)


def test_exact_writes_outputs(tmp_path: Path):
    res = _run("exact", "--L", "1", "--mu0", "poisson:1", "--speed", "--oracle", "--cap", "20", "-o", str(tmp_path))
    assert res.returncode == 0, res.stderr
    assert json.loads((tmp_path / "exact.json").read_text())["oracle"]["tv_to_exact"] < 1e-8
    law = pd.read_csv(tmp_path / "bridge_law.csv")
    assert sorted(law["bridge"]) == ["+-", "-+"]
    assert (tmp_path / "transitions.csv").exists()


def test_exact_divergent_sqrt_sum_exits_4():
    res = _run("exact", "--L", "2", "--mu0", "zeta:1.5")
    assert res.returncode == 4
    assert "zeta" in res.stderr.lower() or "diverg" in res.stderr.lower()


def test_bad_family_exits_2():
    res = _run("simulate", "--L", "2", "--family", "lognormal:1", "--steps", "100")
    assert res.returncode == 2


def test_invalid_config_exits_2():
    res = _run("simulate", "--L", "2", "--family", "geometric:0.5", "--steps", "10", "--burn-in", "20")
    assert res.returncode == 2
    assert "burn_in" in res.stderr


def test_simulate_is_deterministic(tmp_path: Path):
    args = ("simulate", "--L", "2", "--family", "geometric:0.5", "--steps", "5000", "--seed", "7")
    first, second = _run(*args), _run(*args)
    assert first.returncode == 0, first.stderr
    assert first.stdout == second.stdout
    doc = json.loads(first.stdout)
    assert 0 < doc["samples"] <= 5000
    assert sum(doc["nu"].values()) == pytest.approx(1.0)


def test_simulate_seed_from_environment():
    import os

    env = {**os.environ, "GLPP_SEED": "7"}
    args = ("simulate", "--L", "2", "--family", "geometric:0.5", "--steps", "2000")
    assert _run(*args, env=env).stdout == _run(*args, "--seed", "7").stdout


def test_simulate_trajectory(tmp_path: Path):
    path = tmp_path / "run.csv"
    res = _run("simulate", "--L", "1", "--family", "geometric:0.5", "--steps", "300", "--trajectory", str(path))
    assert res.returncode == 0, res.stderr
    log = pd.read_csv(path)
    assert list(log.columns) == ["step", "bridge", "t1", "flips"]


def test_pca_check_poisson_passes():
    res = _run("pca-check", "--mu0", "poisson:1", "--grid", "6,6,16", "--exchange-grid", "4,12")
    assert res.returncode == 0, res.stderr
    checks = {c["identity"]: c for c in json.loads(res.stdout)["checks"]}
    assert checks["stable"]["passed"] is True
    assert checks["exchange"]["passed"] is True


def test_pca_check_perturbed_fails():
    res = _run("pca-check", "--mu0", "geometric:0.5", "--exchange-grid", "4,12", "--perturb", "0.01")
    assert res.returncode == 3


def test_quarterplane_profile(tmp_path: Path):
    svg = tmp_path / "shape.svg"
    res = _run("quarterplane", "--N", "60", "--family", "constant(geometric:0.5)", "--svg", str(svg), "-o", str(tmp_path))
    assert res.returncode == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["reference"] == "geometric:0.5"
    assert doc["diagonal_limit"] == pytest.approx(6.828427, rel=1e-6)
    assert svg.exists()
    assert (tmp_path / "shape_profile.csv").exists()


def test_families_lists_presets():
    res = _run("families")
    assert res.returncode == 0, res.stderr
    assert "geometric-half" in res.stdout


def test_families_expands_one():
    res = _run("families", "poisson-one")
    assert res.returncode == 0, res.stderr
    doc = json.loads(res.stdout)
    assert doc["spec"]["kind"] == "poisson"
    assert doc["continuous"] is False


def test_verify_quick_single_criterion(tmp_path: Path):
    res = _run("verify", "--suite", "quick", "--only", "2", "-o", str(tmp_path))
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "verify_quick.json").read_text())
    assert report["passed"] is True


def test_verify_unknown_suite_exits_2():
    res = _run("verify", "--suite", "nightly")
    assert res.returncode == 2
