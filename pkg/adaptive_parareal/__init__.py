from adaptive_parareal.analysis import (
    CostModel,
    SpeedupReport,
    aggregate_cost,
    ideal_bound,
    ideal_efficiency,
    perturbed_bound,
    speedup_report,
    synthetic_efficiency_check,
    work_total,
)
from adaptive_parareal.calibration import AccuracyChart, build_chart, tol_for_accuracy
from adaptive_parareal.integrators import CostCounters, PropagationResult, SolverConfig, propagate, reference_solve
from adaptive_parareal.parareal import (
    HypothesisConstants,
    PararealConfig,
    PararealRun,
    TimePartition,
    ToleranceSchedule,
    balance_partition,
    coarse_sweep,
    estimate_constants,
    fine_stage,
    run_adaptive,
    run_classical,
    schedule_zeta,
)
from adaptive_parareal.problems import OdeSystem, make_system
from adaptive_parareal.version import APP_VERSION

__version__ = APP_VERSION

__all__ = [
    "AccuracyChart",
    "CostCounters",
    "CostModel",
    "HypothesisConstants",
    "OdeSystem",
    "PararealConfig",
    "PararealRun",
    "PropagationResult",
    "SolverConfig",
    "SpeedupReport",
    "TimePartition",
    "ToleranceSchedule",
    "aggregate_cost",
    "balance_partition",
    "build_chart",
    "coarse_sweep",
    "estimate_constants",
    "fine_stage",
    "ideal_bound",
    "ideal_efficiency",
    "make_system",
    "perturbed_bound",
    "propagate",
    "reference_solve",
    "run_adaptive",
    "run_classical",
    "schedule_zeta",
    "speedup_report",
    "synthetic_efficiency_check",
    "tol_for_accuracy",
    "work_total",
]
