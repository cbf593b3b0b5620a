from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING

from prometheus_client import CollectorRegistry, Counter, Histogram, generate_latest

if TYPE_CHECKING:
    from adaptive_parareal.integrators.types import CostCounters

REGISTRY = CollectorRegistry()

PROPAGATION_COUNT = Counter(
    "adaptive_parareal_propagations_total",
    "Total propagations performed",
    ["method", "status"],
    registry=REGISTRY,
)
RHS_EVALUATIONS = Counter(
    "adaptive_parareal_rhs_evaluations_total",
    "Right-hand side evaluations spent in propagations",
    ["method"],
    registry=REGISTRY,
)
PROPAGATION_LATENCY = Histogram(
    "adaptive_parareal_propagation_duration_seconds",
    "Wall time of a single propagation (seconds)",
    ["method"],
    registry=REGISTRY,
)
ITERATION_COUNT = Counter(
    "adaptive_parareal_iterations_total",
    "Parareal iterations completed",
    ["algorithm"],
    registry=REGISTRY,
)
KNOWN_METHODS = {"explicit_rk54", "radau_iia5", "explicit_euler"}


def _metric_method_label(method: str | None) -> str:
    normalized = (method or "").strip().lower()
    if normalized in KNOWN_METHODS:
        return normalized
    return "other"


def observe_propagation(*, method: str, status: str, cost: "CostCounters", elapsed_seconds: float) -> None:
    label = _metric_method_label(method)
    PROPAGATION_COUNT.labels(label, status).inc()
    RHS_EVALUATIONS.labels(label).inc(cost.rhs_evals)
    PROPAGATION_LATENCY.labels(label).observe(elapsed_seconds)


def observe_iteration(algorithm: str) -> None:
    ITERATION_COUNT.labels(algorithm).inc()


def sample_value(name: str, labels: dict[str, str]) -> float:
    value = REGISTRY.get_sample_value(name, labels)
    return float(value) if value is not None else 0.0


def render_metrics() -> bytes:
    return generate_latest(REGISTRY)


def export_metrics(path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(render_metrics())
    return target
