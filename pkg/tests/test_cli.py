from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from ccmar import __version__
from ccmar.cli import main
from ccmar.data import MarDataset, load_csv, write_csv
from ccmar.limits import SUP_BM
from ccmar.linearity import run_linearity_test
from ccmar.normality import run_full_data_normality_test, run_normality_test
from ccmar.series import fit_complete_case
from ccmar.simulation import ScenarioConfig, generate_scenario, load_scenario, replication_rng


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def ok(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    env = json.loads(out)
    assert set(env) == {"command", "inputs", "result", "version"}
    assert env["version"] == __version__
    return env


def fail(capsys, status, *argv):
    code, out, err = run(capsys, *argv)
    assert code == status
    assert out == ""
    payload = json.loads(err.strip().splitlines()[-1])
    assert set(payload) == {"error", "detail"}
    return payload


def _dataset(seed, n=200, errors=None, p_obs=0.8, rho=lambda v: np.sin(2 * np.pi * v)):
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(n, 1)), rng.random(n)
    eps = rng.normal(size=n) if errors is None else errors(rng, n)
    y = 1.5 * u[:, 0] + rho(v) + eps
    delta = (rng.random(n) < p_obs).astype(np.int8)
    return MarDataset(u, v, np.where(delta == 1, y, np.nan), delta)


def _file(tmp_path, data, name="data.csv"):
    path = tmp_path / name
    write_csv(data, path)
    return path


# --- estimate ---------------------------------------------------------------


def test_estimate_noise_free(tmp_path, capsys):
    u = np.linspace(-1, 1, 30)[:, None]
    v = np.linspace(0, 1, 30)
    data = MarDataset(u, v, 2.0 + 3.0 * u[:, 0], np.ones(30))
    env = ok(capsys, "estimate", "--input", _file(tmp_path, data))
    res = env["result"]
    assert res["theta_hat"][0] == pytest.approx(3.0, abs=1e-10)
    assert res["sigma_hat"] == pytest.approx(0.0, abs=1e-10)
    assert res["N"] == 30 and res["n"] == 30 and res["K"] == 2


def test_estimate_matches_library(tmp_path, capsys):
    data = _dataset(1, n=20)
    path = _file(tmp_path, data)
    env = ok(capsys, "estimate", "--input", path, "--K", "2")
    fit = fit_complete_case(load_csv(path), 2)
    assert env["result"]["theta_hat"] == fit.theta_hat.tolist()
    assert env["result"]["beta_hat"] == fit.beta_hat.tolist()
    assert env["result"]["sigma_hat"] == fit.sigma_hat
    assert env["inputs"]["K"] == 2
    assert ok(capsys, "estimate", "--input", path)["inputs"]["K"] == "auto"


def test_estimate_insufficient_data(tmp_path, capsys):
    data = MarDataset([[0.0], [1.0], [2.0]], [0.1, 0.5, 0.9], [1.0, 2.0, np.nan], [1, 1, 0])
    assert fail(capsys, 3, "estimate", "--input", _file(tmp_path, data))["error"] == "insufficient_data"


def test_estimate_rank_deficient(tmp_path, capsys):
    v = np.linspace(0, 1, 12)
    data = MarDataset(np.cos(np.pi * v)[:, None], v, np.arange(12.0), np.ones(12))
    assert fail(capsys, 3, "estimate", "--input", _file(tmp_path, data))["error"] == "rank_deficient_design"


@pytest.mark.parametrize(
    "text, code",
    [
        ("u1,v,y,delta\n1.0,1.5,2.0,1\n", "v_out_of_range"),
        ("u1,v,y,delta\n1.0,0.5,3.0,0\n", "inconsistent_missingness"),
        ("a,b\n1,2\n", "malformed_header"),
        ("u1,v,y,delta\nx,0.5,3.0,1\n", "non_numeric_field"),
        ("", "empty_file"),
    ],
)
def test_ingestion_errors_exit_2(tmp_path, capsys, text, code):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    for command in ("estimate", "test-normal", "test-linear"):
        assert fail(capsys, 2, command, "--input", path)["error"] == code


def test_missing_file_and_usage_errors(tmp_path, capsys):
    assert fail(capsys, 2, "estimate", "--input", tmp_path / "none.csv")["error"] == "input_error"
    assert fail(capsys, 2, "estimate")["error"] == "usage_error"
    assert fail(capsys, 2, "frobnicate")["error"] == "usage_error"
    assert fail(capsys, 2, "estimate", "--input", "x.csv", "--K", "zero")["error"] == "usage_error"
    assert fail(capsys, 2, "test-normal", "--input", "x.csv", "--alpha", "1.5")["error"] == "usage_error"
    assert fail(capsys, 2, "test-linear", "--input", "x.csv", "--chi", "tan")["error"] == "usage_error"


def test_version_flag(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and out.strip() == __version__


# --- tests ------------------------------------------------------------------


def test_normal_all_observed_equals_full_data(tmp_path, capsys):
    data = _dataset(2, p_obs=1.1)
    env = ok(capsys, "test-normal", "--input", _file(tmp_path, data))
    assert env["result"] == run_full_data_normality_test(data.u, data.v, data.y).to_dict()
    assert set(env["result"]) == {
        "statistic", "critical_value", "p_value", "reject", "n_used", "K_used", "sup_location", "alpha",
    }


def test_linear_all_observed_equals_full_data(tmp_path, capsys):
    data = _dataset(3, p_obs=1.1, rho=lambda v: 0.5 + 0 * v)
    env = ok(capsys, "test-linear", "--input", _file(tmp_path, data), "--chi", "cos1")
    assert env["result"] == run_linearity_test(data, chi="cos1").to_dict()
    assert env["inputs"] == {"input": str(tmp_path / "data.csv"), "alpha": 0.05, "chi": "cos1", "null": "constant"}


def test_strong_alternative_rejects(tmp_path, capsys):
    # centred exponential errors are far from normal
    data = _dataset(4, n=600, errors=lambda r, n: r.exponential(size=n) - 1.0)
    assert run_normality_test(data).statistic > SUP_BM.quantile(0.99)
    res = ok(capsys, "test-normal", "--input", _file(tmp_path, data))["result"]
    assert res["reject"] is True and res["p_value"] < 0.05
    lin = _dataset(5, n=600, rho=lambda v: 2.0 * np.cos(np.pi * v))
    res = ok(capsys, "test-linear", "--input", _file(tmp_path, lin, "lin.csv"))["result"]
    assert res["reject"] is True and res["p_value"] < 0.05


@pytest.mark.parametrize("command", ["test-normal", "test-linear"])
def test_alpha_flips_decision(tmp_path, capsys, command):
    runner = run_normality_test if command == "test-normal" else run_linearity_test
    for seed in range(100, 200):
        data = _dataset(seed, n=150, rho=lambda v: 0.5 + 0 * v)
        p = runner(data).p_value
        if 0.002 < p < 0.45:
            break
    path = _file(tmp_path, data)
    loose = ok(capsys, command, "--input", path, "--alpha", "0.5")["result"]
    strict = ok(capsys, command, "--input", path, "--alpha", "0.001")["result"]
    assert loose["statistic"] == strict["statistic"]
    assert loose["reject"] is True and strict["reject"] is False


def test_precondition_failures_exit_3(tmp_path, capsys):
    tiny = MarDataset([[0.0], [1.0]], [0.2, 0.4], [1.0, 2.0], [1, 1])
    assert fail(capsys, 3, "test-linear", "--input", _file(tmp_path, tiny, "tiny.csv"))["error"] == "insufficient_data"
    u = np.linspace(-1, 1, 30)[:, None]
    exact = MarDataset(u, np.linspace(0, 1, 30), 1.0 + u[:, 0], np.ones(30))
    path = _file(tmp_path, exact, "exact.csv")
    assert fail(capsys, 3, "test-normal", "--input", path)["error"] == "degenerate_residuals"


# --- critical values and verification ----------------------------------------


def test_critical_values(capsys):
    env = ok(capsys, "critical-values", "--law", "bridge", "--levels", "0.90,0.95,0.99")
    table = env["result"]["table"]
    assert [row["level"] for row in table] == [0.9, 0.95, 0.99]
    assert table[1]["critical_value"] == pytest.approx(1.3580986, abs=1e-6)
    env = ok(capsys, "critical-values", "--law", "bm")
    assert env["result"]["table"][1]["critical_value"] == pytest.approx(2.2414027, abs=1e-6)
    assert fail(capsys, 2, "critical-values", "--law", "bm", "--levels", "0.95,1.2")["error"] == "input_error"


def test_verify_lemma1(capsys):
    env = ok(capsys, "verify-lemma1")
    assert env["result"]["passed"] is True
    assert env["result"]["max_abs_atom_difference"] <= 1e-12
    assert len(env["result"]["cases"]) == 15
    env = ok(capsys, "verify-lemma1", "--n", "3", "--p", "0.4", "--support", "0,1,5", "--t0", "-1")
    assert env["result"]["passed"] is True


# --- simulate ---------------------------------------------------------------


def _scenario(tmp_path, text):
    path = tmp_path / "scenario.txt"
    path.write_text(text, encoding="utf-8")
    return path


def test_simulate_single_rep_equals_library(tmp_path, capsys):
    path = _scenario(tmp_path, "n = 150\nrho = sin2pi\npi = linear_v(0.6, 0.3)\nseed = 21\n")
    out = tmp_path / "out"
    env = ok(capsys, "simulate", "--scenario", path, "--reps", "1", "--analysis", "normal", "--out", out)
    config = load_scenario(path)
    report = run_normality_test(generate_scenario(config, replication_rng(21, 0)))
    assert env["result"]["report"] == report.to_dict()
    assert env["result"]["rejection_rate"] == float(report.reject)
    assert json.loads((out / "summary.json").read_text()) == env
    lines = (out / "replications.csv").read_text().splitlines()
    assert lines[0] == "rep,statistic,p_value,reject,n_used"
    assert float(lines[1].split(",")[1]) == report.statistic


def test_simulate_linear_and_thread_independence(tmp_path, capsys):
    path = _scenario(tmp_path, "n = 120\nrho = const(0.5)\nseed = 3\n")
    a = ok(capsys, "simulate", "--scenario", path, "--reps", "30", "--analysis", "linear", "--out", tmp_path / "a")
    b = ok(
        capsys, "simulate", "--scenario", path, "--reps", "30", "--analysis", "linear", "--out", tmp_path / "b",
        "--threads", "3",
    )
    assert a["result"] == b["result"]
    assert (tmp_path / "a" / "replications.csv").read_bytes() == (tmp_path / "b" / "replications.csv").read_bytes()
    assert 0.0 <= a["result"]["rejection_rate"] <= 1.0


def test_simulate_transfer_and_efficiency(tmp_path, capsys):
    path = _scenario(tmp_path, "n = 100\npi = linear_v(0.5, 0.4)\nseed = 5\n")
    env = ok(
        capsys, "simulate", "--scenario", path, "--reps", "2000", "--analysis", "transfer", "--out", tmp_path / "t",
        "--bound", "0.05",
    )
    assert env["result"]["within_bound"] is True
    assert env["result"]["kolmogorov_distance"] < 0.05
    env = ok(
        capsys, "simulate", "--scenario", path, "--reps", "50", "--analysis", "efficiency", "--out", tmp_path / "e",
        "--oracle-draws", "100000",
    )
    assert np.array(env["result"]["target_covariance"]).shape == (1, 1)


def test_simulate_config_errors(tmp_path, capsys):
    path = _scenario(tmp_path, "n = 100\nerror = student_t\ndf = 3\n")
    assert fail(capsys, 2, "simulate", "--scenario", path, "--reps", "5", "--analysis", "normal", "--out", tmp_path)[
        "error"
    ] == "invalid_config"
    path = _scenario(tmp_path, "n = 100\nerror = student_t\n")
    assert fail(capsys, 2, "simulate", "--scenario", path, "--reps", "5", "--analysis", "efficiency", "--out", tmp_path)[
        "error"
    ] == "invalid_config"
    assert fail(capsys, 2, "simulate", "--scenario", tmp_path / "nope.txt", "--reps", "5", "--analysis", "normal",
                "--out", tmp_path)["error"] == "input_error"


def test_simulate_precondition_failure_exit_3(tmp_path, capsys):
    path = _scenario(tmp_path, "n = 4\npi = const(0.3)\nseed = 1\n")
    assert fail(capsys, 3, "simulate", "--scenario", path, "--reps", "3", "--analysis", "normal", "--out", tmp_path)[
        "error"
    ] == "replication_error"


# --- the installed entry point ------------------------------------------------


def test_console_script_is_byte_identical(tmp_path):
    data = _dataset(7)
    path = _file(tmp_path, data)
    cmd = [sys.executable, "-m", "ccmar.cli", "test-normal", "--input", str(path)]
    first = subprocess.run(cmd, capture_output=True, check=True)
    second = subprocess.run(cmd, capture_output=True, check=True)
    assert first.stdout == second.stdout
    assert json.loads(first.stdout)["command"] == "test-normal"
    bad = subprocess.run(cmd[:3] + ["estimate", "--input", str(tmp_path / "x.csv")], capture_output=True, text=True)
    assert bad.returncode == 2
    assert json.loads(bad.stderr)["error"] == "input_error"
