from adaptive_parareal.services.calibration_service import build_calibration_service
from adaptive_parareal.services.experiment_service import build_experiment_service

__all__ = [
    "build_calibration_service",
    "build_experiment_service",
]
