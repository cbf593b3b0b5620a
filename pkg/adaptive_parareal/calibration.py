"""Tolerance-to-accuracy charts.

A chart records, for a solver and a system over a horizon ``T``, the global
accuracy reached for a local tolerance ``atol = rtol = tol``. Accuracies are
normalized by ``s * (1 + |u0|)`` where ``s`` is the elapsed time.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import PchipInterpolator
from scipy.optimize import isotonic_regression

from adaptive_parareal.errors import CalibrationError, ConfigurationError
from adaptive_parareal.integrators import SolverConfig, propagate
from adaptive_parareal.problems import OdeSystem

MIN_SAMPLES = 4
EPS_FLOOR = 1e-18

ClampSide = Literal["above", "below"]

logger = logging.getLogger("adaptive_parareal.calibration")


@dataclass(frozen=True)
class ChartQuery:
    tol: float
    clamped: ClampSide | None = None


@dataclass(frozen=True, eq=False)
class AccuracyChart:
    tols: tuple[float, ...]
    eps: tuple[float, ...]
    system_id: str
    method: str
    T: float
    raw_eps: tuple[float, ...] = ()
    checkpoints: int = 0
    solver: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.tols) != len(self.eps) or len(self.tols) < 2:
            raise ConfigurationError("chart needs at least two (tol, eps) samples")
        tols = np.asarray(self.tols, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if np.any(tols <= 0) or np.any(eps <= 0):
            raise ConfigurationError("chart samples must be strictly positive")
        if np.any(np.diff(tols) <= 0):
            raise ConfigurationError("chart tolerances must be strictly increasing")
        if np.any(np.diff(eps) < 0):
            raise ConfigurationError("chart accuracies must be nondecreasing in tol")

        log_tol = np.log(tols)
        log_eps = np.log(eps)
        object.__setattr__(self, "_forward", PchipInterpolator(log_tol, log_eps, extrapolate=False))

        # merge tied accuracies, keeping the loosest tolerance of each tie
        unique_eps, inverse = np.unique(log_eps, return_inverse=True)
        loosest = np.full(unique_eps.shape, -np.inf)
        np.maximum.at(loosest, inverse, log_tol)
        object.__setattr__(self, "_inverse_x", unique_eps)
        object.__setattr__(self, "_inverse_y", loosest)
        inverse_fit = PchipInterpolator(unique_eps, loosest) if unique_eps.size >= 2 else None
        object.__setattr__(self, "_inverse", inverse_fit)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.tols, self.eps))

    @property
    def tol_range(self) -> tuple[float, float]:
        return self.tols[0], self.tols[-1]

    @property
    def eps_range(self) -> tuple[float, float]:
        return self.eps[0], self.eps[-1]

    def eps_for_tol(self, tol: float) -> float:
        lo, hi = self.tol_range
        clipped = min(max(float(tol), lo), hi)
        return float(np.exp(self._forward(np.log(clipped))))  # type: ignore[attr-defined]

    def query(self, zeta: float) -> ChartQuery:
        if not zeta > 0:
            raise ValueError("zeta must be positive")
        eps_lo, eps_hi = self.eps_range
        if zeta >= eps_hi:
            return ChartQuery(self.tols[-1], "above" if zeta > eps_hi else None)
        if zeta < eps_lo:
            return ChartQuery(self.tols[0], "below")
        if self._inverse is None:  # type: ignore[attr-defined]
            return ChartQuery(self.tols[-1])
        value = float(np.exp(self._inverse(np.log(zeta))))  # type: ignore[attr-defined]
        lo, hi = self.tol_range
        return ChartQuery(min(max(value, lo), hi))

    def check_compatible(self, system: OdeSystem, T: float, method: str) -> None:
        mismatches = {}
        if self.system_id != system.fingerprint:
            mismatches["system"] = {"chart": self.system_id, "run": system.fingerprint}
        if not math.isclose(self.T, T, rel_tol=1e-12, abs_tol=0.0):
            mismatches["T"] = {"chart": self.T, "run": T}
        if self.method != method:
            mismatches["method"] = {"chart": self.method, "run": method}
        if mismatches:
            raise ConfigurationError("chart does not match the run configuration", details=mismatches)


def tol_for_accuracy(chart: AccuracyChart, zeta: float) -> float:
    result = chart.query(zeta)
    if result.clamped == "below":
        logger.warning(
            "chart_query_clamped",
            extra={"zeta": zeta, "tol": result.tol, "method": chart.method, "detail": "below_tightest_sample"},
        )
    elif result.clamped == "above":
        logger.debug(
            "chart_query_clamped",
            extra={"zeta": zeta, "tol": result.tol, "method": chart.method, "detail": "above_loosest_sample"},
        )
    return result.tol


def chart_grid(T: float, checkpoints: int) -> NDArray[np.float64]:
    if checkpoints < 1:
        raise ConfigurationError("chart needs at least one checkpoint", details={"checkpoints": checkpoints})
    return np.linspace(0.0, T, checkpoints + 1)


def measure_accuracy(
    system: OdeSystem,
    cfg: SolverConfig,
    T: float,
    reference: Sequence[NDArray[np.float64]],
) -> float | None:
    """Normalized global accuracy of one sequential run; None when the run fails."""
    grid = chart_grid(T, len(reference) - 1)
    scale = 1.0 + system.norm_of(system.u0)
    y = np.array(system.u0, dtype=float)
    worst = 0.0
    for index in range(1, grid.size):
        start = float(grid[index - 1])
        result = propagate(system, start, float(grid[index]) - start, y, cfg, interval=index - 1)
        if not result.converged:
            return None
        y = result.y_end
        deviation = system.norm_of(y - np.asarray(reference[index]))
        worst = max(worst, deviation / (float(grid[index]) * scale))
    return max(worst, EPS_FLOOR)


def _normalized_tolerances(tol_list: Sequence[float]) -> list[float]:
    values = [float(tol) for tol in tol_list]
    if any(not math.isfinite(tol) or tol <= 0 for tol in values):
        raise ConfigurationError("tolerances must be positive", details={"tol_list": values})
    unique = sorted(set(values), reverse=True)
    if len(unique) < len(values):
        logger.warning(
            "chart_duplicate_tolerances",
            extra={"detail": f"collapsed {len(values) - len(unique)} repeated tolerance(s)"},
        )
    return unique


def regularize(eps_by_increasing_tol: Sequence[float]) -> NDArray[np.float64]:
    """Isotonic projection in log space so eps is nondecreasing as tol grows."""
    log_eps = np.log(np.asarray(eps_by_increasing_tol, dtype=float))
    fitted = isotonic_regression(log_eps, increasing=True).x
    return np.exp(fitted)


def build_chart(
    system: OdeSystem,
    method: str,
    T: float,
    tol_list: Sequence[float],
    reference: Sequence[NDArray[np.float64]],
    *,
    solver: SolverConfig | None = None,
    max_workers: int = 1,
) -> AccuracyChart:
    if not T > 0:
        raise ConfigurationError("chart horizon must be positive", details={"T": T})
    if len(reference) < 2:
        raise ConfigurationError("reference must hold the initial state and at least one checkpoint")
    tolerances = _normalized_tolerances(tol_list)
    if len(tolerances) < MIN_SAMPLES:
        raise ConfigurationError(
            f"chart needs at least {MIN_SAMPLES} distinct tolerances",
            details={"tol_list": tolerances},
        )
    base = (solver or SolverConfig()).model_copy(update={"method": method})

    def _sample(tol: float) -> float | None:
        return measure_accuracy(system, base.with_tolerance(tol), T, reference)

    workers = max(1, min(int(max_workers), len(tolerances)))
    if workers == 1:
        measured = [_sample(tol) for tol in tolerances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            measured = list(pool.map(_sample, tolerances))

    kept = [(tol, eps) for tol, eps in zip(tolerances, measured) if eps is not None]
    failed = [tol for tol, eps in zip(tolerances, measured) if eps is None]
    for tol in failed:
        logger.warning("chart_sample_failed", extra={"method": method, "tol": tol, "problem": system.name})
    if len(kept) < MIN_SAMPLES:
        raise CalibrationError(
            "too few successful calibration samples",
            details={"required": MIN_SAMPLES, "succeeded": len(kept), "failed_tolerances": failed},
        )

    kept.sort()
    raw = [eps for _tol, eps in kept]
    regular = regularize(raw)
    logger.info(
        "chart_built",
        extra={"problem": system.name, "method": method, "detail": f"{len(kept)} samples over T={T:g}"},
    )
    return AccuracyChart(
        tols=tuple(tol for tol, _eps in kept),
        eps=tuple(float(value) for value in regular),
        raw_eps=tuple(raw),
        system_id=system.fingerprint,
        method=method,
        T=float(T),
        checkpoints=len(reference) - 1,
        solver=base.model_dump(exclude={"atol", "rtol"}),
    )
