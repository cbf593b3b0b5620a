import numpy as np
import pytest

from adaptive_parareal.calibration import build_chart, chart_grid, measure_accuracy, tol_for_accuracy
from adaptive_parareal.integrators import SolverConfig, propagate, reference_solve
from adaptive_parareal.parareal import PararealConfig, TimePartition, balance_partition, run_adaptive
from adaptive_parareal.parareal.partition import _count_spread
from adaptive_parareal.problems import make_brusselator
from adaptive_parareal.repositories.report_repository import ReportRepository
from adaptive_parareal.services import build_calibration_service, build_experiment_service
from conftest import build_run_config, build_test_config

pytestmark = pytest.mark.acceptance

RK54 = SolverConfig(method="explicit_rk54")
RADAU = SolverConfig(method="radau_iia5", warm_start="previous_iteration")
FINE_TOLERANCES = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12]
RK54_FINE_TOLERANCES = [1e-4, 1e-6, 1e-8, 1e-10, 1e-12]
COARSE_TOLERANCES = [1e-1, 1e-2, 1e-3, 1e-4]


def _brusselator_config(tmp_path, *, T, n_intervals, eta=1e-8, **sections):
    defaults = {
        "problem": {"name": "brusselator", "T": T},
        "partition": {"n_intervals": n_intervals, "balance": True},
        "schedule": {"mode": "practical", "eta": eta, "eps_g": 0.1},
        "solvers": {
            "coarse": {"method": "explicit_rk54"},
            "fine": {"method": "radau_iia5", "warm_start": "previous_iteration"},
        },
        "calibration": {
            "coarse_tolerances": COARSE_TOLERANCES,
            "fine_tolerances": FINE_TOLERANCES,
            "checkpoints": 10,
        },
    }
    defaults.update(sections)
    return build_run_config(source_path=str(tmp_path / "run.toml"), **defaults)


def _experiments(tmp_path):
    settings = build_test_config(MAX_WORKERS=4)
    return build_experiment_service(
        settings=settings,
        calibration=build_calibration_service(settings=settings),
        reports=ReportRepository(tmp_path / "reports"),
    )


def test_tight_radau_solution_matches_reference():
    system = make_brusselator()
    result = propagate(system, 0.0, 20.0, system.u0, SolverConfig(method="radau_iia5").with_tolerance(1e-12))
    reference = reference_solve(system, 20.0, TimePartition.uniform(20.0, 1))
    assert result.converged
    assert np.max(np.abs(result.y_end - reference[-1])) <= 1e-9


def test_exact_fine_solver_terminates_after_n_intervals_iterations():
    system = make_brusselator()
    partition = TimePartition.uniform(20.0, 10)
    reference = reference_solve(system, 20.0, partition)
    cfg = PararealConfig(
        coarse=RK54.with_tolerance(1e-2),
        fine=RK54,
        partition=partition,
        reference=reference,
        k_max=10,
    )
    run = run_adaptive(system, 20.0, 10, 1e-9, 0.1, "exact", cfg)
    for k, row in enumerate(run.states):
        reached = min(k, run.n_intervals)
        worst = max(np.max(np.abs(row[N] - reference[N])) for N in range(reached + 1))
        assert worst <= 1e-9


def test_adaptive_and_classical_runs_reach_the_target(tmp_path):
    config = _brusselator_config(
        tmp_path,
        T=20.0,
        n_intervals=20,
        solvers={"coarse": {"method": "explicit_rk54"}, "fine": {"method": "explicit_rk54"}},
        calibration={"coarse_tolerances": COARSE_TOLERANCES, "fine_tolerances": RK54_FINE_TOLERANCES, "checkpoints": 10},
    )
    outcome = _experiments(tmp_path).run(config, "both")
    assert outcome.ok
    for run in outcome.runs.values():
        assert run.final_error <= 1e-8


@pytest.mark.parametrize("n_intervals", [10, 25, 50])
def test_adaptive_speedup_dominates_classical(tmp_path, n_intervals):
    outcome = _experiments(tmp_path).run(_brusselator_config(tmp_path, T=100.0, n_intervals=n_intervals), "both")
    report = outcome.report
    assert outcome.ok and report is not None
    classical, adaptive = outcome.runs["classical"], outcome.runs["adaptive"]
    assert adaptive.converged_at <= classical.converged_at + 1
    assert report.speedup_ap >= report.speedup_cp
    assert report.speedup_ap / report.speedup_cp >= 1.3


def test_coarse_cost_impact_ordering(tmp_path):
    outcome = _experiments(tmp_path).run(_brusselator_config(tmp_path, T=100.0, n_intervals=25), "both")
    report = outcome.report
    assert outcome.ok and report is not None
    adaptive, classical = report.adaptive, report.classical
    assert classical.efficiency_with_coarse < adaptive.efficiency_with_coarse
    assert adaptive.efficiency_with_coarse <= classical.efficiency_without_coarse
    assert classical.efficiency_without_coarse < adaptive.efficiency_without_coarse
    assert adaptive.efficiency_without_coarse >= 3.0 * classical.efficiency_with_coarse


def test_observed_errors_stay_below_the_perturbed_bound(tmp_path):
    config = build_run_config(
        source_path=str(tmp_path / "run.toml"),
        problem={"name": "linear", "T": 2.0, "params": {"lam": -1.0}},
        partition={"n_intervals": 8, "balance": False},
        schedule={"mode": "theoretical", "eta": 1e-8, "eps_g": 0.1, "accuracy_units": "normalized"},
        solvers={"coarse": {"method": "explicit_euler"}, "fine": {"method": "radau_iia5"}},
        calibration={"coarse_tolerances": COARSE_TOLERANCES, "fine_tolerances": FINE_TOLERANCES, "checkpoints": 8},
        bounds={"n_samples": 20, "inflation": 2.0},
    )
    outcome = _experiments(tmp_path).bounds(config, serial=True)
    # one Euler step per interval realizes an accuracy close to the requested one
    assert 0.005 <= outcome.constants.eps_g / 2.0 <= 0.2
    resolved = [row for row in outcome.rows if row["resolved"] and row["observed_error"] is not None]
    assert len(resolved) >= 2
    for row in resolved:
        assert row["observed_error"] <= row["perturbed_bound"]


def test_fine_chart_round_trip_on_brusselator():
    system = make_brusselator()
    reference = reference_solve(system, 20.0, chart_grid(20.0, 10))
    chart = build_chart(system, "explicit_rk54", 20.0, RK54_FINE_TOLERANCES, reference, solver=RK54)
    for eps in chart.eps:
        achieved = measure_accuracy(system, RK54.with_tolerance(tol_for_accuracy(chart, eps)), 20.0, reference)
        assert achieved is not None
        assert eps / 3.0 <= achieved <= 3.0 * eps


def test_balancing_evens_out_fine_cost_on_brusselator():
    system = make_brusselator()
    coarse = RK54.with_tolerance(1e-4)
    result = propagate(system, 0.0, 100.0, system.u0, coarse)
    uniform = TimePartition.uniform(100.0, 10)
    balanced = balance_partition(system, 100.0, 10, coarse)
    assert balanced.boundaries != uniform.boundaries
    assert _count_spread(result.step_times, balanced) < _count_spread(result.step_times, uniform)

    fine = RADAU.with_tolerance(1e-8)
    starts = reference_solve(system, 100.0, balanced)
    steps = []
    for N in range(balanced.n_intervals):
        t0, dt = balanced.interval(N)
        steps.append(propagate(system, t0, dt, starts[N], fine).cost.total_steps)
    assert max(steps) / min(steps) <= 1.5
