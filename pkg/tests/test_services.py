import dataclasses

import pytest

from adaptive_parareal.analysis import CostModel
from adaptive_parareal.errors import NumericalFailureError
from adaptive_parareal.repositories.chart_repository import ChartRepository
from adaptive_parareal.repositories.report_repository import ReportRepository
from adaptive_parareal.services import build_calibration_service, build_experiment_service
from adaptive_parareal.services import calibration_service as calibration_module
from adaptive_parareal.services import experiment_service as experiment_module
from adaptive_parareal.services.experiment_service import history_rows
from conftest import build_finished_run, build_run_config


def test_reference_trajectory_is_cached_per_system_and_horizon(monkeypatch, settings, decay_system):
    calls = []
    original = calibration_module.reference_solve

    def counting_reference_solve(*args, **kwargs):
        calls.append(args[1])
        return original(*args, **kwargs)

    monkeypatch.setattr(calibration_module, "reference_solve", counting_reference_solve)
    service = build_calibration_service(settings=settings)

    first = service.reference(decay_system, 1.0, 4)
    second = service.reference(decay_system, 1.0, 4)
    service.reference(decay_system, 2.0, 4)

    assert first is second
    assert calls == [1.0, 2.0]


def test_charts_for_persists_then_loads_configured_charts(tmp_path, settings):
    service = build_calibration_service(settings=settings, repository=ChartRepository())
    config = build_run_config(source_path=str(tmp_path / "run.toml"))

    built = service.charts_for(config, persist=True)
    coarse_path = built["coarse"].path
    fine_path = built["fine"].path
    assert coarse_path == tmp_path.resolve() / "reports" / "linear_coarse_explicit_rk54_chart.json"
    assert fine_path is not None and fine_path.is_file()

    configured = build_run_config(
        source_path=str(tmp_path / "run.toml"),
        calibration={"coarse_chart": str(coarse_path), "fine_chart": str(fine_path)},
    )
    loaded = service.charts_for(configured)
    assert loaded["fine"].chart.tols == built["fine"].chart.tols
    assert loaded["coarse"].chart.eps == built["coarse"].chart.eps


def test_history_rows_pair_fine_stage_with_its_row():
    run = build_finished_run(zetas=(1e-2,), fine_rhs=10, coarse_rhs=2)
    run.increments = [None, 0.5]
    rows = history_rows(run, CostModel())
    assert [row["k"] for row in rows] == [0, 1]
    assert rows[0]["zeta_k"] == 1e-2
    assert rows[0]["fine_tol"] == 1e-6
    assert rows[0]["fine_cost"] == 10.0
    assert rows[0]["fine_cost_total"] == 40.0
    assert rows[0]["coarse_cost"] == 8.0
    assert rows[1]["zeta_k"] is None and rows[1]["fine_tol"] is None
    assert rows[1]["increment"] == 0.5
    assert rows[1]["max_error"] is None


def _experiments(settings, tmp_path):
    return build_experiment_service(
        settings=settings,
        calibration=build_calibration_service(settings=settings),
        reports=ReportRepository(tmp_path / "out"),
    )


def test_failed_sequential_solve_is_a_numerical_failure(monkeypatch, tmp_path, settings):
    original = experiment_module.propagate

    def underflowing(*args, **kwargs):
        return dataclasses.replace(original(*args, **kwargs), status="step_size_underflow")

    monkeypatch.setattr(experiment_module, "propagate", underflowing)
    config = build_run_config(source_path=str(tmp_path / "run.toml"))
    with pytest.raises(NumericalFailureError) as exc_info:
        _experiments(settings, tmp_path).run(config, "classical", serial=True)
    assert exc_info.value.details["status"] == "step_size_underflow"


def test_practical_adaptive_run_takes_K_from_the_classical_run(tmp_path, settings):
    config = build_run_config(
        source_path=str(tmp_path / "run.toml"),
        schedule={"mode": "practical", "eta": 1e-8},
    )
    outcome = _experiments(settings, tmp_path).run(config, "both", serial=True)
    classical, adaptive = outcome.runs["classical"], outcome.runs["adaptive"]
    assert classical.status == "converged"
    assert adaptive.schedule.K == max(1, classical.converged_at - 2)

    fixed = build_run_config(
        source_path=str(tmp_path / "run.toml"),
        schedule={"mode": "practical", "eta": 1e-8, "K": 3},
    )
    assert _experiments(settings, tmp_path).run(fixed, "both", serial=True).runs["adaptive"].schedule.K == 3


def test_bounds_rows_flag_fine_accuracies_below_the_chart(tmp_path, settings):
    config = build_run_config(
        source_path=str(tmp_path / "run.toml"),
        schedule={"eta": 1e-12},
        calibration={"fine_tolerances": [1e-4, 1e-5, 1e-6, 1e-7]},
        bounds={"n_samples": 10},
    )
    outcome = _experiments(settings, tmp_path).bounds(config, serial=True)
    assert outcome.rows[0]["resolved"] is True
    assert any(not row["resolved"] for row in outcome.rows)
    flags = [row["resolved"] for row in outcome.rows]
    assert flags == sorted(flags, reverse=True)
