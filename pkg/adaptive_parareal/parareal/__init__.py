from adaptive_parareal.parareal.constants import HypothesisConstants, estimate_constants
from adaptive_parareal.parareal.engine import (
    AccuracyUnits,
    CoarseSweep,
    FineStage,
    PararealConfig,
    PararealRun,
    accuracy_scale,
    coarse_sweep,
    estimate_practical_K,
    practical_K,
    fine_stage,
    run_adaptive,
    run_classical,
)
from adaptive_parareal.parareal.partition import TimePartition, balance_partition
from adaptive_parareal.parareal.schedule import EXACT_ZETA, SCHEDULE_MODES, ScheduleMode, ToleranceSchedule, schedule_zeta

__all__ = [
    "AccuracyUnits",
    "EXACT_ZETA",
    "SCHEDULE_MODES",
    "CoarseSweep",
    "FineStage",
    "HypothesisConstants",
    "PararealConfig",
    "PararealRun",
    "ScheduleMode",
    "TimePartition",
    "ToleranceSchedule",
    "accuracy_scale",
    "balance_partition",
    "coarse_sweep",
    "estimate_constants",
    "estimate_practical_K",
    "practical_K",
    "fine_stage",
    "run_adaptive",
    "run_classical",
    "schedule_zeta",
]
