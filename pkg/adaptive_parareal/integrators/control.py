from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
from numpy.typing import NDArray

SAFETY = 0.9
SHRINK_MIN = 0.2
GROW_MAX = 5.0


def step_controller(
    err_norm: float,
    order: int,
    h: float,
    *,
    h_min: float = 0.0,
    h_max: float = math.inf,
    safety: float = SAFETY,
    shrink_min: float = SHRINK_MIN,
    grow_max: float = GROW_MAX,
) -> tuple[bool, float]:
    """Embedded-pair controller: accept iff err_norm <= 1, rescale h by err^(-1/(order+1))."""
    if err_norm < 0 or h <= 0:
        raise ValueError("err_norm must be nonnegative and h positive")
    accept = err_norm <= 1.0
    if err_norm == 0.0:
        factor = grow_max
    else:
        factor = min(grow_max, max(shrink_min, safety * err_norm ** (-1.0 / (order + 1))))
    return accept, min(h_max, max(h_min, h * factor))


def error_norm(
    error: NDArray[np.float64],
    y: NDArray[np.float64],
    y_new: NDArray[np.float64],
    atol: float,
    rtol: float,
) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(error) / scale)) if error.size else 0.0


def _rms(values: NDArray[np.float64]) -> float:
    return float(np.sqrt(np.mean(values * values))) if values.size else 0.0


def select_initial_step(
    rhs: Callable[[float, NDArray[np.float64]], NDArray[np.float64]],
    t0: float,
    y0: NDArray[np.float64],
    f0: NDArray[np.float64],
    order: int,
    atol: float,
    rtol: float,
    *,
    interval: float,
    h_max: float = math.inf,
) -> float:
    """Starting step from the size of the solution and its derivatives; costs one rhs call."""
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, interval)
    f1 = np.asarray(rhs(t0 + h0, y0 + h0 * f0), dtype=float)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100.0 * h0, h1, interval, h_max)


def reached(t: float, t_end: float) -> bool:
    return t_end - t <= 4.0 * np.finfo(float).eps * max(1.0, abs(t_end))
