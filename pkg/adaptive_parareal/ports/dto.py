from __future__ import annotations

from typing import TypedDict


class ChartSampleDTO(TypedDict):
    tol: float
    eps: float
    raw_eps: float


class HistoryRowDTO(TypedDict):
    k: int
    max_error: float | None
    increment: float | None
    zeta_k: float | None
    fine_tol: float | None
    fine_cost: float
    fine_cost_total: float
    coarse_cost: float


class SpeedupRowDTO(TypedDict):
    T: float
    n_intervals: int
    eta: float
    algorithm: str
    status: str
    converged_at: int | None
    speedup_with_G: float | None
    speedup_without_G: float | None
    efficiency_with_G: float | None
    efficiency_without_G: float | None


class BoundsRowDTO(TypedDict):
    k: int
    observed_error: float | None
    ideal_bound: float
    perturbed_bound: float
    resolved: bool
