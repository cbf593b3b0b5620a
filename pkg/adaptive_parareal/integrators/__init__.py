from adaptive_parareal.integrators.control import step_controller
from adaptive_parareal.integrators.propagate import (
    REFERENCE_TOL,
    make_propagator,
    propagate,
    propagate_fixed,
    reference_config,
    reference_solve,
)
from adaptive_parareal.integrators.types import CostCounters, PropagationResult, SolverConfig
from adaptive_parareal.integrators.warm_start import WarmStartHistory, newton_initial_guess

__all__ = [
    "REFERENCE_TOL",
    "CostCounters",
    "PropagationResult",
    "SolverConfig",
    "WarmStartHistory",
    "make_propagator",
    "newton_initial_guess",
    "propagate",
    "propagate_fixed",
    "reference_config",
    "reference_solve",
    "step_controller",
]
