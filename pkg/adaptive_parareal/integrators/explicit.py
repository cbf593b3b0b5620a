"""Explicit propagators: Dormand-Prince 5(4) with FSAL, and fixed-step Euler."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.integrators.control import error_norm, reached, select_initial_step, step_controller
from adaptive_parareal.integrators.types import CostCounters, PropagationResult, SolverConfig
from adaptive_parareal.problems import OdeSystem

DOPRI_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
DOPRI_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
DOPRI_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and 4th order weights; last entry weights the FSAL stage
DOPRI_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
DOPRI_ERROR_ORDER = 4
DOPRI_STAGES = 7


def _dopri_step(
    system: OdeSystem,
    t: float,
    y: NDArray[np.float64],
    f: NDArray[np.float64],
    h: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    K = np.empty((DOPRI_STAGES, y.size), dtype=float)
    K[0] = f
    for stage in range(1, 6):
        dy = h * (DOPRI_A[stage, :stage] @ K[:stage])
        K[stage] = system.rhs(t + DOPRI_C[stage] * h, y + dy)
    y_new = y + h * (DOPRI_B @ K[:6])
    f_new = np.asarray(system.rhs(t + h, y_new), dtype=float)
    K[6] = f_new
    return y_new, f_new, h * (DOPRI_E @ K)


def dopri5_propagate(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: NDArray[np.float64],
    cfg: SolverConfig,
) -> PropagationResult:
    cost = CostCounters()
    t_end = t0 + dt
    t = t0
    y = np.array(y0, dtype=float)
    f = np.asarray(system.rhs(t, y), dtype=float)
    cost.rhs_evals += 1
    if cfg.h_init is not None:
        h = cfg.h_init
    else:
        h = select_initial_step(
            system.rhs, t, y, f, DOPRI_ERROR_ORDER, cfg.atol, cfg.rtol, interval=dt, h_max=cfg.h_max
        )
        cost.rhs_evals += 1
    h = max(cfg.h_min, min(h, cfg.h_max))
    step_times: list[float] = []

    while not reached(t, t_end):
        last = t + h >= t_end
        if last:
            h = t_end - t
        y_new, f_new, err = _dopri_step(system, t, y, f, h)
        cost.rhs_evals += 6
        if not np.all(np.isfinite(y_new)):
            err_norm = math.inf
        else:
            err_norm = error_norm(err, y, y_new, cfg.atol, cfg.rtol)
        accept, h_next = step_controller(
            err_norm if math.isfinite(err_norm) else 1e10,
            DOPRI_ERROR_ORDER,
            h,
            h_min=cfg.h_min,
            h_max=cfg.h_max,
        )
        if accept:
            t = t_end if last else t + h
            y, f = y_new, f_new
            cost.accepted_steps += 1
            step_times.append(t)
        else:
            cost.rejected_steps += 1
            if h <= cfg.h_min or t + h_next == t:
                return PropagationResult(
                    y_end=y,
                    cost=cost,
                    t0=t0,
                    dt=dt,
                    status="step_size_underflow",
                    step_times=np.array(step_times),
                    message=f"step size fell below h_min at t={t:.6g}",
                )
        h = h_next

    return PropagationResult(y_end=y, cost=cost, t0=t0, dt=dt, step_times=np.array(step_times))


def euler_propagate(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: NDArray[np.float64],
    cfg: SolverConfig,
) -> PropagationResult:
    n_steps = 1 if cfg.h_init is None else max(1, math.ceil(dt / cfg.h_init - 1e-12))
    return fixed_step_propagate(system, t0, dt, y0, "explicit_euler", n_steps)


def fixed_step_propagate(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: NDArray[np.float64],
    method: str,
    n_steps: int,
) -> PropagationResult:
    """Explicit fixed-step propagation without error control, used for order checks."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    cost = CostCounters()
    h = dt / n_steps
    y = np.array(y0, dtype=float)
    times = t0 + h * np.arange(1, n_steps + 1)
    for step in range(n_steps):
        t = t0 + step * h
        f = np.asarray(system.rhs(t, y), dtype=float)
        if method == "explicit_euler":
            y = y + h * f
            cost.rhs_evals += 1
        else:
            y, _f_new, _err = _dopri_step(system, t, y, f, h)
            cost.rhs_evals += 7
        cost.accepted_steps += 1
    return PropagationResult(y_end=y, cost=cost, t0=t0, dt=dt, step_times=times)
