import json

import pandas as pd
import pytest

from adaptive_parareal import cli
from adaptive_parareal.version import APP_VERSION

DECAY_CONFIG = """
seed = 3

[problem]
name = "linear"
T = 2.0
params = {{ lam = -1.0 }}

[partition]
{partition}
balance = false

[schedule]
mode = "theoretical"
{eta}
eps_g = 0.1

[solvers.coarse]
method = "explicit_rk54"

[solvers.fine]
method = "explicit_rk54"

[calibration]
coarse_tolerances = [1e-2, 1e-3, 1e-4, 1e-5]
fine_tolerances = [1e-4, 1e-6, 1e-8, 1e-10, 1e-12]
checkpoints = 4

[bounds]
n_samples = 10

[output]
directory = "reports"
"""


@pytest.fixture(autouse=True)
def _quiet_cli(monkeypatch):
    monkeypatch.setattr(cli, "configure_logging", lambda **kwargs: None)
    monkeypatch.setenv("MAX_WORKERS", "1")
    monkeypatch.setenv("METRICS_EXPORT_PATH", "")


def _write_config(tmp_path, *, partition="n_intervals = 4", eta="eta = 1e-6", name="run.toml"):
    path = tmp_path / name
    path.write_text(DECAY_CONFIG.format(partition=partition, eta=eta), encoding="utf-8")
    return path


def test_version_flag_prints_version(capsys):
    with pytest.raises(SystemExit) as exc_info:
        cli.main(["--version"])
    assert exc_info.value.code == 0
    assert APP_VERSION in capsys.readouterr().out


def test_calibrate_writes_identical_charts_on_rerun(tmp_path, capsys):
    config = _write_config(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["calibrate", "--config", str(config), "--out", str(out), "--serial"]) == 0
    first = {path.name: path.read_bytes() for path in out.glob("*_chart.json")}
    assert set(first) == {"linear_coarse_explicit_rk54_chart.json", "linear_fine_explicit_rk54_chart.json"}

    assert cli.main(["calibrate", "--config", str(config), "--out", str(out), "--serial"]) == 0
    second = {path.name: path.read_bytes() for path in out.glob("*_chart.json")}
    assert first == second
    printed = capsys.readouterr().out
    assert '"command": "calibrate"' in printed


def test_run_writes_history_and_summary(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "out"
    metrics = tmp_path / "metrics.prom"
    code = cli.main(
        ["run", "--config", str(config), "--out", str(out), "--serial", "--metrics", str(metrics)]
    )
    assert code == 0

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert set(summary["runs"]) == {"classical", "adaptive"}
    assert all(run["status"] == "converged" for run in summary["runs"].values())
    assert summary["provenance"]["config_path"] == str(config)
    assert summary["speedups"]["n_intervals"] == 4

    history = pd.read_csv(out / "adaptive_history.csv")
    assert history["k"].tolist() == list(range(len(history)))
    assert history["max_error"].iloc[-1] <= 1e-5
    assert (out / "classical_history.csv").is_file()
    assert b"adaptive_parareal_propagations_total" in metrics.read_bytes()


def test_run_single_algorithm(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config), "--out", str(out), "--serial", "--algorithm", "classical"]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert list(summary["runs"]) == ["classical"]
    assert not (out / "adaptive_history.csv").exists()


def test_loose_target_stops_after_initial_sweep(tmp_path):
    config = _write_config(tmp_path, eta="eta = 1.0")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config), "--out", str(out), "--serial"]) == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["runs"]["adaptive"]["converged_at"] == 0
    assert summary["runs"]["classical"]["converged_at"] == 0


def test_sweep_writes_one_row_per_point_and_algorithm(tmp_path):
    config = _write_config(tmp_path, partition="sweep = [2, 4]", eta="eta_sweep = [1e-4, 1e-6]")
    out = tmp_path / "out"
    # the adaptive run may exhaust its iteration budget on two intervals
    assert cli.main(["sweep", "--config", str(config), "--out", str(out), "--serial"]) in (0, 2)
    table = pd.read_csv(out / "speedups.csv")
    assert len(table) == 8
    assert set(table["algorithm"]) == {"classical", "adaptive"}
    assert set(table["n_intervals"]) == {2, 4}
    assert set(table["status"]) <= {"converged", "diverged"}
    assert (table[table["algorithm"] == "classical"]["status"] == "converged").all()


def test_bounds_writes_bound_table(tmp_path):
    config = _write_config(tmp_path)
    out = tmp_path / "out"
    code = cli.main(["bounds", "--config", str(config), "--out", str(out), "--serial"])
    assert code in (0, 2)
    table = pd.read_csv(out / "bounds.csv")
    assert list(table.columns) == ["k", "observed_error", "ideal_bound", "perturbed_bound", "resolved"]
    assert bool(table["resolved"].iloc[0])
    assert (table["perturbed_bound"] >= table["ideal_bound"]).all()
    summary = json.loads((out / "bounds_summary.json").read_text(encoding="utf-8"))
    assert set(summary["constants"]) == {"estimated", "inflated"}
    assert summary["ideal_efficiency"]["efficiency"] == pytest.approx(1.0 / (1.0 + 0.1 ** (1.0 / 5.0)))


def test_missing_problem_exits_with_configuration_error(tmp_path, capsys):
    config = tmp_path / "broken.toml"
    config.write_text('[schedule]\neta = 1e-6\neps_g = 0.1\n', encoding="utf-8")
    assert cli.main(["run", "--config", str(config)]) == 1
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["code"] == "CONFIGURATION_ERROR"


def test_missing_config_file_exits_with_configuration_error(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.toml")]) == 1


def test_wrong_command_arity_exits_with_configuration_error(tmp_path):
    config = _write_config(tmp_path, partition="sweep = [2, 4]")
    assert cli.main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == 1


def test_unknown_command_is_rejected():
    with pytest.raises(SystemExit) as exc_info:
        cli.main(["plot", "--config", "x.toml"])
    assert exc_info.value.code == 2


def test_diverged_run_writes_error_report_without_speedups(tmp_path, monkeypatch):
    monkeypatch.setenv("APP_ENV", "test")
    config = _write_config(tmp_path, eta="eta = 1e-12\nk_max = 1")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(config), "--out", str(out), "--serial"]) == 2

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert {run["status"] for run in summary["runs"].values()} == {"diverged"}
    assert summary["speedups"] is None
    assert summary["provenance"]["environment"] == "test"

    error = json.loads((out / "error.json").read_text(encoding="utf-8"))
    assert error["error"]["code"] == "DIVERGED"
    assert error["error"]["details"] == {"classical": "diverged", "adaptive": "diverged"}
