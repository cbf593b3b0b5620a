from __future__ import annotations

import logging
import threading
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, cast

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.calibration import AccuracyChart, build_chart, chart_grid
from adaptive_parareal.config import Config
from adaptive_parareal.integrators import SolverConfig, reference_solve
from adaptive_parareal.ports.repositories import ChartRepositoryPort
from adaptive_parareal.ports.services import CalibrationServicePort
from adaptive_parareal.problems import OdeSystem, make_system
from adaptive_parareal.repositories.chart_repository import ChartRepository
from adaptive_parareal.schemas import RunConfig

logger = logging.getLogger("adaptive_parareal.calibration")

ChartRole = Literal["coarse", "fine"]


@dataclass(frozen=True)
class CalibratedChart:
    role: ChartRole
    chart: AccuracyChart
    path: Path | None


class CalibrationService:
    def __init__(self, *, settings: Config, repository: ChartRepositoryPort) -> None:
        self._settings = settings
        self._repository = repository
        self._references: dict[tuple[str, float, int], list[NDArray[np.float64]]] = {}
        self._lock = threading.Lock()

    def reference(self, system: OdeSystem, T: float, checkpoints: int) -> list[NDArray[np.float64]]:
        key = (system.fingerprint, float(T), int(checkpoints))
        with self._lock:
            cached = self._references.get(key)
        if cached is not None:
            return cached
        states = reference_solve(system, T, chart_grid(T, checkpoints), tol=self._settings.REFERENCE_TOL)
        with self._lock:
            self._references[key] = states
        return states

    def calibrate(
        self,
        system: OdeSystem,
        solver: SolverConfig,
        T: float,
        tolerances: Sequence[float],
        *,
        checkpoints: int | None = None,
        max_workers: int = 1,
    ) -> AccuracyChart:
        count = checkpoints or self._settings.CHART_CHECKPOINTS
        reference = self.reference(system, T, count)
        return build_chart(
            system,
            solver.method,
            T,
            tolerances,
            reference,
            solver=solver,
            max_workers=max_workers,
        )

    def load(self, path: Path, system: OdeSystem, T: float, method: str) -> AccuracyChart:
        chart = self._repository.load(path)
        chart.check_compatible(system, T, method)
        logger.info("chart_loaded", extra={"problem": system.name, "method": method, "detail": str(path)})
        return chart

    def save(self, chart: AccuracyChart, path: Path) -> Path:
        return self._repository.save(chart, path)

    def charts_for(self, run_config: RunConfig, *, max_workers: int = 1, persist: bool = False) -> dict[ChartRole, CalibratedChart]:
        """Coarse and fine charts for a run: loaded when configured, built otherwise."""
        system = system_from_config(run_config)
        T = run_config.problem.T
        section = run_config.calibration
        plan: dict[ChartRole, tuple[SolverConfig, list[float], str | None]] = {
            "coarse": (run_config.solvers.coarse, section.coarse_tolerances, section.coarse_chart),
            "fine": (run_config.solvers.fine, section.fine_tolerances, section.fine_chart),
        }
        charts: dict[ChartRole, CalibratedChart] = {}
        for role, (solver, tolerances, configured) in plan.items():
            path = run_config.resolve_path(configured) if configured else None
            if path is not None and not persist:
                charts[role] = CalibratedChart(role, self.load(path, system, T, solver.method), path)
                continue
            chart = self.calibrate(
                system,
                solver,
                T,
                tolerances,
                checkpoints=section.checkpoints,
                max_workers=max_workers,
            )
            if persist:
                path = path or default_chart_path(run_config, role, solver.method)
                self.save(chart, path)
            charts[role] = CalibratedChart(role, chart, path)
        return charts


def system_from_config(run_config: RunConfig) -> OdeSystem:
    return make_system(run_config.problem.name, run_config.problem.params, norm=run_config.problem.norm)


def default_chart_path(run_config: RunConfig, role: ChartRole, method: str) -> Path:
    directory = run_config.resolve_path(run_config.output.directory)
    return directory / f"{run_config.output.prefix}{run_config.problem.name}_{role}_{method}_chart.json"


def build_calibration_service(
    *,
    settings: Config | None = None,
    repository: ChartRepositoryPort | None = None,
) -> CalibrationServicePort:
    selected_repository = repository or ChartRepository()
    service = CalibrationService(settings=settings or Config(), repository=selected_repository)
    return cast(CalibrationServicePort, cast(object, service))
