from __future__ import annotations

import logging
from typing import Literal

from adaptive_parareal.config import Config
from adaptive_parareal.errors import ConfigurationError
from adaptive_parareal.problems import make_system
from adaptive_parareal.schemas import RunConfig

Command = Literal["calibrate", "run", "sweep", "bounds"]

logger = logging.getLogger("adaptive_parareal.validation")


def validate_settings(config: Config) -> None:
    if config.MAX_WORKERS < 0:
        raise ConfigurationError("MAX_WORKERS must be greater than or equal to 0.")
    if not 0 < config.REFERENCE_TOL < 1e-6:
        raise ConfigurationError("REFERENCE_TOL must lie in (0, 1e-6).")
    if config.CHART_CHECKPOINTS <= 0:
        raise ConfigurationError("CHART_CHECKPOINTS must be greater than 0.")


def validate_run_config(run_config: RunConfig, command: Command) -> None:
    """Cross-section checks that depend on the command being executed."""
    make_system(run_config.problem.name, run_config.problem.params, norm=run_config.problem.norm)

    if command == "calibrate":
        if not (run_config.calibration.coarse_chart or run_config.calibration.fine_chart):
            logger.info(
                "calibration_default_paths",
                extra={"problem": run_config.problem.name, "detail": "charts written to the output directory"},
            )
        return

    for label in ("coarse_chart", "fine_chart"):
        value = getattr(run_config.calibration, label)
        if value and not run_config.resolve_path(value).is_file():
            raise ConfigurationError(
                f"calibration.{label} does not exist",
                details={"path": str(run_config.resolve_path(value))},
            )

    counts = run_config.partition.counts
    etas = run_config.schedule.etas
    if command == "sweep":
        if not run_config.partition.sweep or not run_config.schedule.eta_sweep:
            raise ConfigurationError("sweep requires partition.sweep and schedule.eta_sweep to be nonempty.")
        return
    if len(counts) != 1:
        raise ConfigurationError(f"{command} requires exactly one partition.n_intervals", details={"counts": counts})
    if len(etas) != 1:
        raise ConfigurationError(f"{command} requires exactly one schedule.eta", details={"etas": etas})
    if run_config.schedule.eps_g <= etas[0] / 2.0:
        logger.warning(
            "coarse_accuracy_meets_target",
            extra={
                "problem": run_config.problem.name,
                "detail": "eps_g <= eta/2, the run stops after the initial coarse sweep",
            },
        )
