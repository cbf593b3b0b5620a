from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.calibration import AccuracyChart
from adaptive_parareal.integrators import SolverConfig
from adaptive_parareal.problems import OdeSystem
from adaptive_parareal.schemas import Algorithm, RunConfig

if TYPE_CHECKING:
    from adaptive_parareal.services.calibration_service import CalibratedChart
    from adaptive_parareal.services.experiment_service import BoundsOutcome, RunOutcome, SweepOutcome


class CalibrationServicePort(Protocol):
    def reference(self, system: OdeSystem, T: float, checkpoints: int) -> list[NDArray[np.float64]]:
        ...

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
        ...

    def load(self, path: Path, system: OdeSystem, T: float, method: str) -> AccuracyChart:
        ...

    def charts_for(
        self,
        run_config: RunConfig,
        *,
        max_workers: int = 1,
        persist: bool = False,
    ) -> "dict[str, CalibratedChart]":
        ...


class ExperimentServicePort(Protocol):
    def run(self, run_config: RunConfig, algorithm: Algorithm, *, serial: bool = False) -> "RunOutcome":
        ...

    def sweep(self, run_config: RunConfig, *, serial: bool = False) -> "SweepOutcome":
        ...

    def bounds(self, run_config: RunConfig, *, serial: bool = False) -> "BoundsOutcome":
        ...
