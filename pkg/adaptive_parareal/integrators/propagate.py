from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from functools import partial
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray

from adaptive_parareal.errors import NumericalFailureError
from adaptive_parareal.integrators.explicit import dopri5_propagate, euler_propagate, fixed_step_propagate
from adaptive_parareal.integrators.radau import radau_fixed_step, radau_propagate
from adaptive_parareal.integrators.types import PropagationResult, SolverConfig
from adaptive_parareal.integrators.warm_start import WarmStartHistory
from adaptive_parareal.observability import observe_propagation
from adaptive_parareal.problems import OdeSystem

if TYPE_CHECKING:
    from adaptive_parareal.parareal.partition import TimePartition

REFERENCE_TOL = 1e-13

Propagator = Callable[..., PropagationResult]

logger = logging.getLogger("adaptive_parareal.integrators")


def _validated_state(system: OdeSystem, y0: ArrayLike) -> NDArray[np.float64]:
    state = np.array(y0, dtype=float).reshape(-1)
    if state.shape != (system.dim,):
        raise ValueError(f"state has shape {state.shape}, expected ({system.dim},)")
    if not np.all(np.isfinite(state)):
        raise ValueError("initial state must be finite")
    return state


def propagate(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: ArrayLike,
    cfg: SolverConfig,
    history: WarmStartHistory | None = None,
    *,
    interval: int = 0,
) -> PropagationResult:
    if not dt > 0:
        raise ValueError("dt must be positive")
    state = _validated_state(system, y0)
    started = time.perf_counter()
    if cfg.method == "radau_iia5":
        result = radau_propagate(system, t0, dt, state, cfg, history, interval=interval)
    elif cfg.method == "explicit_euler":
        result = euler_propagate(system, t0, dt, state, cfg)
    else:
        result = dopri5_propagate(system, t0, dt, state, cfg)
    elapsed = time.perf_counter() - started
    observe_propagation(method=cfg.method, status=result.status, cost=result.cost, elapsed_seconds=elapsed)
    if not result.converged:
        logger.warning(
            "propagation_failed",
            extra={
                "problem": system.name,
                "method": cfg.method,
                "interval": interval,
                "tol": cfg.tolerance,
                "status": result.status,
                "detail": result.message,
            },
        )
    return result


def propagate_fixed(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: ArrayLike,
    method: str,
    n_steps: int,
    cfg: SolverConfig | None = None,
) -> PropagationResult:
    state = _validated_state(system, y0)
    if method == "radau_iia5":
        return radau_fixed_step(system, t0, dt, state, n_steps, cfg or SolverConfig(method="radau_iia5"))
    if method not in ("explicit_rk54", "explicit_euler"):
        raise ValueError(f"unknown method: {method}")
    return fixed_step_propagate(system, t0, dt, state, method, n_steps)


def make_propagator(system: OdeSystem, cfg: SolverConfig) -> Propagator:
    """Bind a system and solver; the result is called as ``prop(t0, dt, y0, history=None, interval=0)``."""
    return partial(propagate, system, cfg=cfg)


def reference_config(tol: float = REFERENCE_TOL) -> SolverConfig:
    return SolverConfig(method="radau_iia5", atol=tol, rtol=tol, h_min=1e-15)


def reference_solve(
    system: OdeSystem,
    T: float,
    grid: "TimePartition | Sequence[float]",
    *,
    tol: float = REFERENCE_TOL,
) -> list[NDArray[np.float64]]:
    """High-accuracy states at every grid boundary, restarting the solver at each one."""
    if not T > 0:
        raise ValueError("T must be positive")
    boundaries = [float(value) for value in getattr(grid, "boundaries", grid)]
    if not boundaries or boundaries[0] != 0.0:
        raise ValueError("grid must start at 0")
    cfg = reference_config(tol)
    states = [np.array(system.u0, dtype=float)]
    for index, (start, stop) in enumerate(zip(boundaries[:-1], boundaries[1:])):
        result = propagate(system, start, stop - start, states[-1], cfg, interval=index)
        if not result.converged:
            raise NumericalFailureError(
                "reference solve failed",
                details={
                    "problem": system.fingerprint,
                    "interval": index,
                    "t0": start,
                    "status": result.status,
                    "message": result.message,
                },
            )
        states.append(result.y_end)
    return states
