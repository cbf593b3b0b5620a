from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from adaptive_parareal.errors import ConfigurationError
from adaptive_parareal.integrators import SolverConfig, propagate
from adaptive_parareal.problems import OdeSystem

# spreads at or below this count as flat step density
BALANCE_SPREAD_THRESHOLD = 1.05
MIN_STEPS_PER_INTERVAL = 4

logger = logging.getLogger("adaptive_parareal.parareal")


@dataclass(frozen=True)
class TimePartition:
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(value) for value in self.boundaries)
        if len(values) < 2:
            raise ConfigurationError("partition needs at least two boundaries")
        if values[0] != 0.0:
            raise ConfigurationError("partition must start at 0", details={"first": values[0]})
        if any(b <= a for a, b in zip(values[:-1], values[1:])):
            raise ConfigurationError("partition boundaries must be strictly increasing")
        object.__setattr__(self, "boundaries", values)

    @classmethod
    def uniform(cls, T: float, n_intervals: int) -> "TimePartition":
        if n_intervals < 1:
            raise ConfigurationError("number of intervals must be at least 1", details={"n_intervals": n_intervals})
        if not T > 0:
            raise ConfigurationError("horizon T must be positive", details={"T": T})
        points = np.linspace(0.0, float(T), int(n_intervals) + 1)
        points[-1] = float(T)
        return cls(tuple(points))

    @classmethod
    def from_points(cls, points: ArrayLike) -> "TimePartition":
        return cls(tuple(np.asarray(points, dtype=float).tolist()))

    @property
    def n_intervals(self) -> int:
        return len(self.boundaries) - 1

    @property
    def T(self) -> float:
        return self.boundaries[-1]

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.boundaries[:-1], self.boundaries[1:]))

    @property
    def max_width(self) -> float:
        return max(self.widths)

    def interval(self, N: int) -> tuple[float, float]:
        """(t0, dt) of interval N."""
        start = self.boundaries[N]
        return start, self.boundaries[N + 1] - start


def _count_spread(times: np.ndarray, partition: TimePartition) -> float:
    counts = np.arange(times.size, dtype=float)
    at_boundaries = np.interp(partition.boundaries, times, counts)
    per_interval = np.diff(at_boundaries)
    smallest = float(per_interval.min())
    return float(per_interval.max()) / smallest if smallest > 0 else np.inf


def balance_partition(
    system: OdeSystem,
    T: float,
    n_intervals: int,
    cfg_coarse: SolverConfig,
    *,
    spread_threshold: float = BALANCE_SPREAD_THRESHOLD,
) -> TimePartition:
    """Boundaries giving each interval an equal share of the coarse solver's accepted steps."""
    uniform = TimePartition.uniform(T, n_intervals)
    if n_intervals == 1:
        return uniform

    result = propagate(system, 0.0, float(T), system.u0, cfg_coarse)
    if not result.converged or result.step_times is None:
        logger.warning(
            "partition_balance_fallback",
            extra={"problem": system.name, "status": result.status, "detail": "coarse run failed"},
        )
        return uniform

    steps = result.step_times.size
    if steps < MIN_STEPS_PER_INTERVAL * n_intervals:
        logger.info(
            "partition_balance_skipped",
            extra={"problem": system.name, "detail": f"{steps} coarse steps for {n_intervals} intervals"},
        )
        return uniform

    times = np.concatenate(([0.0], result.step_times))
    spread = _count_spread(times, uniform)
    if spread <= spread_threshold:
        logger.info(
            "partition_balance_skipped",
            extra={"problem": system.name, "detail": f"flat step density (spread {spread:.3f})"},
        )
        return uniform

    counts = np.arange(times.size, dtype=float)
    targets = np.linspace(0.0, counts[-1], n_intervals + 1)
    points = np.interp(targets, counts, times)
    points[0], points[-1] = 0.0, float(T)
    partition = TimePartition.from_points(points)
    logger.info(
        "partition_balanced",
        extra={"problem": system.name, "detail": f"uniform step spread {spread:.3f} over {n_intervals} intervals"},
    )
    return partition
