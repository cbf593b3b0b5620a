"""Cost aggregation, speedups and convergence bounds for completed runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

from pydantic import BaseModel, ConfigDict, Field

from adaptive_parareal.errors import ConfigurationError, NumericalFailureError
from adaptive_parareal.integrators import CostCounters
from adaptive_parareal.parareal import HypothesisConstants, PararealRun, ToleranceSchedule, schedule_zeta

CostMode = Literal["measured", "synthetic"]


class CostWeights(BaseModel):
    """Scalar weight per counter; ``None`` resolves to the system dimension (or its square)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    accepted_steps: float = Field(default=1.0, ge=0)
    rejected_steps: float = Field(default=0.0, ge=0)
    rhs_evals: float = Field(default=1.0, ge=0)
    jac_evals: float | None = Field(default=None, ge=0)
    lin_solves: float | None = Field(default=None, ge=0)

    def resolved(self, dim: int) -> dict[str, float]:
        return {
            "accepted_steps": self.accepted_steps,
            "rejected_steps": self.rejected_steps,
            "rhs_evals": self.rhs_evals,
            "jac_evals": float(dim) if self.jac_evals is None else self.jac_evals,
            "lin_solves": float(dim * dim) if self.lin_solves is None else self.lin_solves,
        }


class CostModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: CostMode = "measured"
    alpha: float = Field(default=5.0, gt=0)
    weights: CostWeights = Field(default_factory=CostWeights)
    communication_delay: float = Field(default=0.0, ge=0)


@dataclass(frozen=True)
class IterationCost:
    k: int
    coarse: float
    fine_max: float
    fine_sum: float


def work(counters: CostCounters, model: CostModel, dim: int) -> float:
    weights = model.weights.resolved(dim)
    return float(sum(weight * getattr(counters, name) for name, weight in weights.items()))


def _require_complete(run: PararealRun) -> None:
    if run.status == "failed":
        raise NumericalFailureError("cannot aggregate the cost of a failed run", details=run.failure)
    if not run.complete:
        raise ValueError("run is not complete")


def iteration_costs(run: PararealRun, model: CostModel) -> list[IterationCost]:
    """Per-iteration costs; row k pairs the coarse sweep producing row k with fine stage k."""
    widths = run.partition.widths
    rows: list[IterationCost] = []
    for k, coarse_row in enumerate(run.coarse_costs):
        if model.mode == "synthetic":
            coarse = sum(width * run.eps_g ** (-1.0 / model.alpha) for width in widths)
        else:
            coarse = sum(work(cost, model, run.dim) for cost in coarse_row)
        fine: list[float] = []
        if k < len(run.fine_costs):
            if model.mode == "synthetic":
                fine = [width * run.zetas[k] ** (-1.0 / model.alpha) for width in widths]
            else:
                fine = [work(cost, model, run.dim) for cost in run.fine_costs[k]]
        rows.append(IterationCost(k=k, coarse=coarse, fine_max=max(fine, default=0.0), fine_sum=sum(fine)))
    return rows


def aggregate_cost(run: PararealRun, model: CostModel, include_coarse: bool = True) -> float:
    """Critical-path cost: each fine stage costs its slowest interval, coarse sweeps are sequential."""
    _require_complete(run)
    total = 0.0
    for row in iteration_costs(run, model):
        total += row.fine_max
        if include_coarse:
            total += row.coarse
    return total + model.communication_delay * len(run.fine_costs)


def work_total(run: PararealRun, model: CostModel, include_coarse: bool = True) -> float:
    """Total work summed over every interval of every stage."""
    _require_complete(run)
    rows = iteration_costs(run, model)
    return sum(row.fine_sum + (row.coarse if include_coarse else 0.0) for row in rows)


def speedup(cost_seq: float, cost_parallel: float) -> float:
    if cost_parallel <= 0:
        return math.inf
    return cost_seq / cost_parallel


def efficiency(speedup_value: float, n_intervals: int) -> float:
    return speedup_value / n_intervals


@dataclass(frozen=True)
class AlgorithmSpeedup:
    algorithm: str
    cost_with_coarse: float
    cost_without_coarse: float
    speedup_with_coarse: float
    speedup_without_coarse: float
    efficiency_with_coarse: float
    efficiency_without_coarse: float
    work_total: float
    converged_at: int | None
    status: str


@dataclass(frozen=True)
class SpeedupReport:
    cost_seq: float
    n_intervals: int
    eta: float
    T: float
    adaptive: AlgorithmSpeedup | None = None
    classical: AlgorithmSpeedup | None = None

    @property
    def cost_ap(self) -> float | None:
        return self.adaptive.cost_with_coarse if self.adaptive else None

    @property
    def cost_cp(self) -> float | None:
        return self.classical.cost_with_coarse if self.classical else None

    @property
    def speedup_ap(self) -> float | None:
        return self.adaptive.speedup_with_coarse if self.adaptive else None

    @property
    def speedup_cp(self) -> float | None:
        return self.classical.speedup_with_coarse if self.classical else None

    @property
    def efficiency_ap(self) -> float | None:
        return self.adaptive.efficiency_with_coarse if self.adaptive else None

    @property
    def efficiency_cp(self) -> float | None:
        return self.classical.efficiency_with_coarse if self.classical else None

    def entries(self) -> list[AlgorithmSpeedup]:
        return [entry for entry in (self.adaptive, self.classical) if entry is not None]


def _algorithm_speedup(run: PararealRun, cost_seq: float, model: CostModel) -> AlgorithmSpeedup:
    with_coarse = aggregate_cost(run, model, include_coarse=True)
    without_coarse = aggregate_cost(run, model, include_coarse=False)
    s_with = speedup(cost_seq, with_coarse)
    s_without = speedup(cost_seq, without_coarse)
    return AlgorithmSpeedup(
        algorithm=run.algorithm,
        cost_with_coarse=with_coarse,
        cost_without_coarse=without_coarse,
        speedup_with_coarse=s_with,
        speedup_without_coarse=s_without,
        efficiency_with_coarse=efficiency(s_with, run.n_intervals),
        efficiency_without_coarse=efficiency(s_without, run.n_intervals),
        work_total=work_total(run, model),
        converged_at=run.converged_at,
        status=run.status,
    )


def speedup_report(
    run_ap: PararealRun | None,
    run_cp: PararealRun | None,
    cost_seq_measured: float | CostCounters,
    model: CostModel,
) -> SpeedupReport:
    runs = [run for run in (run_ap, run_cp) if run is not None]
    if not runs:
        raise ValueError("at least one run is required")
    if run_ap is not None and run_cp is not None:
        if not math.isclose(run_ap.eta, run_cp.eta, rel_tol=1e-12):
            raise ConfigurationError(
                "runs target different accuracies",
                details={"eta_adaptive": run_ap.eta, "eta_classical": run_cp.eta},
            )
        if run_ap.n_intervals != run_cp.n_intervals:
            raise ConfigurationError("runs use different interval counts")
    first = runs[0]
    if isinstance(cost_seq_measured, CostCounters):
        cost_seq = work(cost_seq_measured, model, first.dim)
    else:
        cost_seq = float(cost_seq_measured)
    return SpeedupReport(
        cost_seq=cost_seq,
        n_intervals=first.n_intervals,
        eta=first.eta,
        T=first.partition.T,
        adaptive=_algorithm_speedup(run_ap, cost_seq, model) if run_ap is not None else None,
        classical=_algorithm_speedup(run_cp, cost_seq, model) if run_cp is not None else None,
    )


def synthetic_sequential_cost(eta: float, T: float, alpha: float) -> float:
    """Sequential fine cost at accuracy eta/2 under the synthetic model."""
    return T * (eta / 2.0) ** (-1.0 / alpha)


def _bound(mu: float, rate: float, k: int) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if rate == 0:
        return 0.0
    try:
        value = mu * rate ** (k + 1) / math.factorial(k + 1)
    except OverflowError:
        value = math.nan
    if math.isfinite(value) or math.isinf(mu):
        return value
    log_value = math.log(mu) + (k + 1) * math.log(rate) - math.lgamma(k + 2)
    return math.exp(min(log_value, 709.0))


def ideal_bound(consts: HypothesisConstants, k: int) -> float:
    return _bound(consts.mu, consts.tau, k)


def perturbed_bound(consts: HypothesisConstants, k: int) -> float:
    return _bound(consts.mu, consts.tau_tilde, k)


def ideal_efficiency(eps_g: float, alpha: float) -> float:
    if not 0 < eps_g < 1:
        raise ValueError("eps_g must lie in (0, 1)")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return 1.0 / (1.0 + eps_g ** (1.0 / alpha))


class SyntheticEfficiency(NamedTuple):
    computed_efficiency: float
    model_efficiency: float
    ratio: float
    cost_ratio: float
    model_cost_ratio: float


def synthetic_efficiency_check(eps_g: float, alpha: float, K: int, N_intervals: int) -> SyntheticEfficiency:
    """Efficiency of the theoretical schedule under the synthetic cost model, coarse cost neglected."""
    if K < 1 or N_intervals < 1:
        raise ValueError("K and N_intervals must be at least 1")
    model_efficiency = ideal_efficiency(eps_g, alpha)
    schedule = ToleranceSchedule(mode="theoretical", eps_g=eps_g, eta=1.0)
    # stage costs dT * zeta_k**(-1/alpha), expressed relative to the last stage:
    # cost_seq = N * last, cost_cp = K * last, cost_ap = relative * last
    log_costs = [-math.log(schedule_zeta(schedule, k)) / alpha for k in range(K)]
    last = log_costs[-1]
    relative = math.fsum(math.exp(value - last) for value in log_costs)
    computed = 1.0 / relative
    return SyntheticEfficiency(
        computed_efficiency=computed,
        model_efficiency=model_efficiency,
        ratio=computed / model_efficiency,
        cost_ratio=K / relative,
        model_cost_ratio=K * model_efficiency,
    )
