"""Newton starting guesses reused across parareal iterations.

Entries are the converged stage values (shape ``(3, dim)``) of the implicit step
ending at fine time node ``n`` of interval ``N``. Node 0 holds the initial state
tiled over the stages.
"""

from __future__ import annotations

import math
import threading

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.integrators.types import WarmStart

StageValues = NDArray[np.float64]

# a stored node is reused only when it ends within this fraction of the step of the new one
NODE_TIME_MATCH = 1e-3


class WarmStartHistory:
    def __init__(self) -> None:
        self.iteration = 0
        self._lock = threading.Lock()
        self._previous: dict[int, dict[int, StageValues]] = {}
        self._current: dict[int, dict[int, StageValues]] = {}
        self._previous_times: dict[int, dict[int, float]] = {}
        self._current_times: dict[int, dict[int, float]] = {}

    def begin_iteration(self, k: int) -> None:
        self.iteration = int(k)

    def reset_interval(self, N: int) -> None:
        with self._lock:
            self._current[N] = {}
            self._current_times[N] = {}

    def record(self, N: int, n: int, stages: StageValues, *, t: float | None = None) -> None:
        with self._lock:
            self._current.setdefault(N, {})[n] = np.array(stages, dtype=float)
            if t is not None:
                self._current_times.setdefault(N, {})[n] = float(t)

    def previous_iterate(self, N: int, n: int) -> StageValues | None:
        return self._previous.get(N, {}).get(n)

    def previous_time(self, N: int, n: int) -> float | None:
        return self._previous_times.get(N, {}).get(n)

    def current_iterate(self, N: int, n: int) -> StageValues | None:
        return self._current.get(N, {}).get(n)

    def commit(self) -> None:
        """Close the iteration: current entries become the previous ones."""
        with self._lock:
            self._previous = self._current
            self._previous_times = self._current_times
            self._current = {}
            self._current_times = {}

    def __len__(self) -> int:
        return sum(len(nodes) for nodes in self._current.values()) + sum(
            len(nodes) for nodes in self._previous.values()
        )


def _lines_up(history: WarmStartHistory, N: int, n: int, t_end: float | None, h: float | None) -> bool:
    if t_end is None:
        return True
    stored = history.previous_time(N, n)
    if stored is None:
        return False
    width = abs(h) if h else max(1.0, abs(t_end))
    return math.isclose(stored, t_end, rel_tol=0.0, abs_tol=NODE_TIME_MATCH * width)


def newton_initial_guess(
    strategy: WarmStart,
    history: WarmStartHistory | None,
    N: int,
    n: int,
    k: int,
    fallback: StageValues,
    *,
    t_end: float | None = None,
    h: float | None = None,
) -> StageValues:
    """Starting stages for the step ending at node ``n``.

    With ``t_end`` given, a stored iterate is only used when the previous
    iteration's node ``n`` ended at the same time; otherwise the fallback
    (the last accepted stages) is returned.
    """
    if k == 0 or history is None or strategy == "previous_time":
        return fallback

    previous = history.previous_iterate(N, n)
    if previous is None or not _lines_up(history, N, n, t_end, h):
        return fallback
    if strategy == "previous_iteration":
        return previous

    current_before = history.current_iterate(N, n - 1)
    previous_before = history.previous_iterate(N, n - 1)
    if current_before is None or previous_before is None:
        return previous
    return previous + current_before - previous_before
