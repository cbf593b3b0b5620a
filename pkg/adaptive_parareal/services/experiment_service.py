from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, cast

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.analysis import (
    CostModel,
    SpeedupReport,
    ideal_bound,
    ideal_efficiency,
    iteration_costs,
    perturbed_bound,
    speedup_report,
    synthetic_efficiency_check,
    synthetic_sequential_cost,
    work,
)
from adaptive_parareal.calibration import AccuracyChart, tol_for_accuracy
from adaptive_parareal.config import Config
from adaptive_parareal.errors import NumericalFailureError, PararealError
from adaptive_parareal.integrators import SolverConfig, propagate, reference_solve
from adaptive_parareal.parareal import (
    AccuracyUnits,
    HypothesisConstants,
    PararealConfig,
    PararealRun,
    TimePartition,
    accuracy_scale,
    balance_partition,
    estimate_constants,
    practical_K,
    run_adaptive,
    run_classical,
)
from adaptive_parareal.ports.dto import BoundsRowDTO, HistoryRowDTO, SpeedupRowDTO
from adaptive_parareal.ports.repositories import ReportRepositoryPort
from adaptive_parareal.ports.services import CalibrationServicePort, ExperimentServicePort
from adaptive_parareal.problems import OdeSystem
from adaptive_parareal.schemas import Algorithm, RunConfig
from adaptive_parareal.services.calibration_service import system_from_config

logger = logging.getLogger("adaptive_parareal.experiments")


@dataclass
class RunOutcome:
    runs: dict[str, PararealRun]
    report: SpeedupReport | None
    files: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(run.status == "converged" for run in self.runs.values())


@dataclass
class SweepOutcome:
    rows: list[SpeedupRowDTO]
    files: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(row["status"] == "converged" for row in self.rows)


@dataclass
class BoundsOutcome:
    rows: list[BoundsRowDTO]
    constants: HypothesisConstants
    run: PararealRun
    files: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.run.status == "converged"


@dataclass(frozen=True)
class _Setup:
    system: OdeSystem
    coarse_chart: AccuracyChart
    fine_chart: AccuracyChart


def history_rows(run: PararealRun, model: CostModel) -> list[HistoryRowDTO]:
    rows: list[HistoryRowDTO] = []
    for cost in iteration_costs(run, model):
        k = cost.k
        has_fine = k < len(run.zetas)
        rows.append(
            {
                "k": k,
                "max_error": run.errors[k] if run.errors is not None else None,
                "increment": run.increments[k],
                "zeta_k": run.zetas[k] if has_fine else None,
                "fine_tol": max(run.fine_tols[k]) if has_fine else None,
                "fine_cost": cost.fine_max,
                "fine_cost_total": cost.fine_sum,
                "coarse_cost": cost.coarse,
            }
        )
    return rows


def _run_summary(run: PararealRun) -> dict[str, Any]:
    return {
        "algorithm": run.algorithm,
        "status": run.status,
        "converged_at": run.converged_at,
        "iterations": run.iterations,
        "final_error": run.final_error,
        "coarse_tol": run.coarse_tol,
        "schedule": {"mode": run.schedule.mode, "K": run.schedule.K, "nu": list(run.schedule.nu)},
        "failure": run.failure,
    }


def _report_summary(report: SpeedupReport) -> dict[str, Any]:
    return {
        "cost_seq": report.cost_seq,
        "n_intervals": report.n_intervals,
        "eta": report.eta,
        "T": report.T,
        "algorithms": {
            entry.algorithm: {
                "cost_with_G": entry.cost_with_coarse,
                "cost_without_G": entry.cost_without_coarse,
                "speedup_with_G": entry.speedup_with_coarse,
                "speedup_without_G": entry.speedup_without_coarse,
                "efficiency_with_G": entry.efficiency_with_coarse,
                "efficiency_without_G": entry.efficiency_without_coarse,
                "work_total": entry.work_total,
            }
            for entry in report.entries()
        },
    }


class ExperimentService:
    def __init__(
        self,
        *,
        settings: Config,
        calibration: CalibrationServicePort,
        reports: ReportRepositoryPort,
    ) -> None:
        self._settings = settings
        self._calibration = calibration
        self._reports = reports

    def _workers(self, n_intervals: int, serial: bool) -> int:
        return 1 if serial else self._settings.worker_count(n_intervals)

    def _setup(self, run_config: RunConfig, *, serial: bool) -> _Setup:
        system = system_from_config(run_config)
        workers = 1 if serial else self._settings.worker_count(len(run_config.calibration.fine_tolerances))
        charts = self._calibration.charts_for(run_config, max_workers=workers)
        return _Setup(system=system, coarse_chart=charts["coarse"].chart, fine_chart=charts["fine"].chart)

    def _coarse_solver(self, run_config: RunConfig, setup: _Setup, scale: float) -> SolverConfig:
        tol = tol_for_accuracy(setup.coarse_chart, run_config.schedule.eps_g / scale)
        return run_config.solvers.coarse.with_tolerance(tol)

    def _partition(self, run_config: RunConfig, setup: _Setup, n_intervals: int, scale: float) -> TimePartition:
        T = run_config.problem.T
        if not run_config.partition.balance:
            return TimePartition.uniform(T, n_intervals)
        return balance_partition(setup.system, T, n_intervals, self._coarse_solver(run_config, setup, scale))

    def _engine_config(
        self,
        run_config: RunConfig,
        setup: _Setup,
        partition: TimePartition,
        reference: list[NDArray[np.float64]],
        *,
        serial: bool,
        units: AccuracyUnits | None = None,
    ) -> PararealConfig:
        schedule = run_config.schedule
        return PararealConfig(
            coarse=run_config.solvers.coarse,
            fine=run_config.solvers.fine,
            coarse_chart=setup.coarse_chart,
            fine_chart=setup.fine_chart,
            partition=partition,
            K=schedule.K,
            k_max=schedule.k_max,
            update_nu=schedule.update_nu,
            accuracy_units=units or schedule.accuracy_units,
            max_workers=self._workers(partition.n_intervals, serial),
            reference=reference,
            reference_tol=self._settings.REFERENCE_TOL,
        )

    def sequential_cost(self, run_config: RunConfig, setup: _Setup, eta: float, scale: float) -> float:
        """Cost of one sequential fine solve over [0, T] at accuracy eta/2."""
        model = run_config.cost_model
        T = run_config.problem.T
        if model.mode == "synthetic":
            return synthetic_sequential_cost(eta, T, model.alpha)
        tol = tol_for_accuracy(setup.fine_chart, eta / 2.0 / scale)
        started = time.perf_counter()
        result = propagate(setup.system, 0.0, T, setup.system.u0, run_config.solvers.fine.with_tolerance(tol))
        logger.info(
            "sequential_reference_cost",
            extra={
                "problem": setup.system.name,
                "method": run_config.solvers.fine.method,
                "tol": tol,
                "status": result.status,
                "duration_ms": round((time.perf_counter() - started) * 1000.0, 3),
            },
        )
        if not result.converged:
            raise NumericalFailureError(
                "sequential fine solve failed",
                details={"problem": setup.system.name, "tol": tol, "status": result.status, "message": result.message},
            )
        return work(result.cost, model, setup.system.dim)

    def _run_pair(
        self,
        run_config: RunConfig,
        setup: _Setup,
        n_intervals: int,
        eta: float,
        algorithm: Algorithm,
        *,
        serial: bool,
    ) -> tuple[dict[str, PararealRun], SpeedupReport | None]:
        T = run_config.problem.T
        scale = accuracy_scale(setup.system, T, run_config.schedule.accuracy_units)
        partition = self._partition(run_config, setup, n_intervals, scale)
        reference = reference_solve(setup.system, T, partition, tol=self._settings.REFERENCE_TOL)
        engine_config = self._engine_config(run_config, setup, partition, reference, serial=serial)
        eps_g = run_config.schedule.eps_g

        runs: dict[str, PararealRun] = {}
        if algorithm in ("classical", "both"):
            runs["classical"] = run_classical(setup.system, T, n_intervals, eta, eps_g, engine_config)
        if algorithm in ("adaptive", "both"):
            adaptive_config = _with_classical_K(engine_config, run_config, runs.get("classical"))
            runs["adaptive"] = run_adaptive(
                setup.system, T, n_intervals, eta, eps_g, run_config.schedule.mode, adaptive_config
            )

        # only converged runs enter the speedup report
        converged = {name: run for name, run in runs.items() if run.status == "converged"}
        report = None
        if converged:
            cost_seq = self.sequential_cost(run_config, setup, eta, scale)
            report = speedup_report(converged.get("adaptive"), converged.get("classical"), cost_seq, run_config.cost_model)
        return runs, report

    def run(self, run_config: RunConfig, algorithm: Algorithm, *, serial: bool = False) -> RunOutcome:
        setup = self._setup(run_config, serial=serial)
        n_intervals = run_config.partition.counts[0]
        eta = run_config.schedule.etas[0]
        runs, report = self._run_pair(run_config, setup, n_intervals, eta, algorithm, serial=serial)

        outcome = RunOutcome(runs=runs, report=report)
        for name, run in runs.items():
            outcome.files.append(
                self._reports.write_history(history_rows(run, run_config.cost_model), f"{name}_history")
            )
        summary = {
            "problem": setup.system.fingerprint,
            "T": run_config.problem.T,
            "n_intervals": n_intervals,
            "eta": eta,
            "eps_g": run_config.schedule.eps_g,
            "partition": list(next(iter(runs.values())).partition.boundaries) if runs else [],
            "runs": {name: _run_summary(run) for name, run in runs.items()},
            "speedups": _report_summary(report) if report is not None else None,
        }
        outcome.files.append(self._reports.write_summary(summary, "summary"))
        return outcome

    def sweep(self, run_config: RunConfig, *, serial: bool = False) -> SweepOutcome:
        setup = self._setup(run_config, serial=serial)
        T = run_config.problem.T
        rows: list[SpeedupRowDTO] = []
        for n_intervals in run_config.partition.counts:
            for eta in run_config.schedule.etas:
                try:
                    runs, report = self._run_pair(run_config, setup, n_intervals, eta, "both", serial=serial)
                except PararealError as exc:
                    logger.error(
                        "sweep_point_failed",
                        extra={"problem": setup.system.name, "status": exc.code, "detail": exc.message},
                    )
                    for name in ("classical", "adaptive"):
                        rows.append(_speedup_row(T, n_intervals, eta, name, "failed", None, None))
                    continue
                entries = {entry.algorithm: entry for entry in report.entries()} if report else {}
                for name in ("classical", "adaptive"):
                    run = runs[name]
                    rows.append(_speedup_row(T, n_intervals, eta, name, run.status, run.converged_at, entries.get(name)))
        files = [self._reports.write_speedups(rows, "speedups")]
        return SweepOutcome(rows=rows, files=files)

    def bounds(self, run_config: RunConfig, *, serial: bool = False) -> BoundsOutcome:
        """Observed errors against the convergence bounds, in normalized accuracy units."""
        setup = self._setup(run_config, serial=serial)
        system = setup.system
        T = run_config.problem.T
        n_intervals = run_config.partition.counts[0]
        eta = run_config.schedule.etas[0]
        partition = self._partition(run_config, setup, n_intervals, 1.0)
        reference = reference_solve(system, T, partition, tol=self._settings.REFERENCE_TOL)
        coarse = self._coarse_solver(run_config, setup, 1.0)
        requested_eps_g = run_config.schedule.eps_g
        if setup.coarse_chart.query(requested_eps_g).clamped == "above":
            logger.warning(
                "coarse_accuracy_unreachable",
                extra={
                    "problem": system.name,
                    "method": coarse.method,
                    "detail": f"requested eps_g {requested_eps_g:g}, loosest sample {setup.coarse_chart.eps_range[1]:g}",
                },
            )

        estimated = estimate_constants(
            system,
            T,
            partition,
            coarse,
            run_config.bounds.n_samples,
            chart=setup.coarse_chart,
            reference=reference,
            seed=run_config.seed,
            spread=run_config.bounds.spread,
            reference_tol=self._settings.REFERENCE_TOL,
        )
        constants = estimated.inflated(run_config.bounds.inflation)
        engine_config = self._engine_config(run_config, setup, partition, reference, serial=serial, units="normalized")
        engine_config.coarse = coarse
        engine_config.coarse_chart = None
        run = run_adaptive(system, T, n_intervals, eta, constants.eps_g, "theoretical", engine_config)

        # a row is resolved while its fine accuracy lies inside the fine chart
        fine_floor = setup.fine_chart.eps_range[0]
        rows: list[BoundsRowDTO] = [
            {
                "k": k,
                "observed_error": run.errors[k] if run.errors is not None else None,
                "ideal_bound": ideal_bound(constants, k),
                "perturbed_bound": perturbed_bound(constants, k),
                "resolved": k == 0 or run.zetas[k - 1] >= fine_floor,
            }
            for k in range(run.iterations + 1)
        ]
        unresolved = [row["k"] for row in rows if not row["resolved"]]
        if unresolved:
            logger.warning(
                "bounds_rows_unresolved",
                extra={"problem": system.name, "detail": f"rows {unresolved} below fine accuracy {fine_floor:g}"},
            )
        alpha = run_config.cost_model.alpha
        eps_model = run_config.schedule.eps_g
        synthetic = synthetic_efficiency_check(eps_model, alpha, max(run.iterations, 1), n_intervals)
        files = [
            self._reports.write_bounds(rows, "bounds"),
            self._reports.write_summary(
                {
                    "problem": system.fingerprint,
                    "T": T,
                    "n_intervals": n_intervals,
                    "eta": eta,
                    "eps_g": {"requested": requested_eps_g, "realized": estimated.eps_g},
                    "fine_accuracy_floor": fine_floor,
                    "constants": {"estimated": estimated.as_dict(), "inflated": constants.as_dict()},
                    "inflation": run_config.bounds.inflation,
                    "run": _run_summary(run),
                    "ideal_efficiency": {
                        "alpha": alpha,
                        "efficiency": ideal_efficiency(eps_model, alpha),
                        "speedup": n_intervals * ideal_efficiency(eps_model, alpha),
                        "synthetic": synthetic._asdict(),
                    },
                },
                "bounds_summary",
            ),
        ]
        return BoundsOutcome(rows=rows, constants=constants, run=run, files=files)


def _with_classical_K(engine_config: PararealConfig, run_config: RunConfig, classical: PararealRun | None) -> PararealConfig:
    """Practical schedule length taken from the classical run of the same point, unless K is configured."""
    if run_config.schedule.mode != "practical" or engine_config.K is not None:
        return engine_config
    if classical is None or classical.converged_at is None:
        return engine_config
    K = practical_K(classical.converged_at)
    logger.info(
        "practical_K_from_classical",
        extra={"problem": classical.system_name, "iteration": classical.converged_at, "detail": f"K={K}"},
    )
    return replace(engine_config, K=K)


def _speedup_row(
    T: float,
    n_intervals: int,
    eta: float,
    algorithm: str,
    status: str,
    converged_at: int | None,
    entry: Any,
) -> SpeedupRowDTO:
    return {
        "T": T,
        "n_intervals": n_intervals,
        "eta": eta,
        "algorithm": algorithm,
        "status": status,
        "converged_at": converged_at,
        "speedup_with_G": entry.speedup_with_coarse if entry else None,
        "speedup_without_G": entry.speedup_without_coarse if entry else None,
        "efficiency_with_G": entry.efficiency_with_coarse if entry else None,
        "efficiency_without_G": entry.efficiency_without_coarse if entry else None,
    }


def build_experiment_service(
    *,
    settings: Config,
    calibration: CalibrationServicePort,
    reports: ReportRepositoryPort,
) -> ExperimentServicePort:
    service = ExperimentService(settings=settings, calibration=calibration, reports=reports)
    return cast(ExperimentServicePort, cast(object, service))
