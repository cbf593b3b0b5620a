"""Parareal coordinator.

Rows of states are indexed by iteration ``k``; row ``k`` holds ``y^N_k`` for
``N = 0..n_intervals``. A run alternates a concurrent fine stage over all intervals with a
sequential coarse sweep that applies the correction
``y^{N+1}_{k+1} = F^N_k + G(y^N_{k+1}) - G(y^N_k)``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.calibration import AccuracyChart, tol_for_accuracy
from adaptive_parareal.errors import ConfigurationError, NumericalFailureError
from adaptive_parareal.integrators import (
    REFERENCE_TOL,
    CostCounters,
    PropagationResult,
    SolverConfig,
    WarmStartHistory,
    propagate,
    reference_solve,
)
from adaptive_parareal.observability import observe_iteration
from adaptive_parareal.parareal.partition import TimePartition, balance_partition
from adaptive_parareal.parareal.schedule import ScheduleMode, ToleranceSchedule
from adaptive_parareal.problems import OdeSystem

State = NDArray[np.float64]
RunStatus = Literal["running", "converged", "diverged", "failed"]
AccuracyUnits = Literal["global", "normalized"]

logger = logging.getLogger("adaptive_parareal.parareal")

# iterations a practical schedule spends at eta/2 before the increment test passes
PRACTICAL_SETTLE_ITERATIONS = 2


@dataclass
class PararealConfig:
    """Everything a run needs besides the system and its targets."""

    coarse: SolverConfig = field(default_factory=lambda: SolverConfig(method="explicit_rk54"))
    fine: SolverConfig = field(default_factory=lambda: SolverConfig(method="radau_iia5"))
    coarse_chart: AccuracyChart | None = None
    fine_chart: AccuracyChart | None = None
    partition: TimePartition | None = None
    balance: bool = True
    K: int | None = None
    k_max: int | None = None
    nu: tuple[float, ...] = ()
    update_nu: bool = False
    accuracy_units: AccuracyUnits = "global"
    max_workers: int = 1
    reference: list[State] | None = None
    track_errors: bool = True
    reference_tol: float = REFERENCE_TOL


@dataclass
class CoarseSweep:
    row: list[State]
    costs: list[CostCounters]
    coarse_values: list[State]


@dataclass
class FineStage:
    corrections: list[State | None]
    costs: list[CostCounters]
    tols: list[float]
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return bool(self.failures)


@dataclass
class PararealRun:
    algorithm: str
    system_name: str
    partition: TimePartition
    schedule: ToleranceSchedule
    eta: float
    eps_g: float
    coarse_tol: float
    states: list[NDArray[np.float64]] = field(default_factory=list)
    zetas: list[float] = field(default_factory=list)
    fine_tols: list[list[float]] = field(default_factory=list)
    coarse_costs: list[list[CostCounters]] = field(default_factory=list)
    fine_costs: list[list[CostCounters]] = field(default_factory=list)
    increments: list[float | None] = field(default_factory=list)
    errors: list[float] | None = None
    converged_at: int | None = None
    status: RunStatus = "running"
    failure: dict[str, object] | None = None
    dim: int = 1

    @property
    def n_intervals(self) -> int:
        return self.partition.n_intervals

    @property
    def iterations(self) -> int:
        return len(self.states) - 1

    @property
    def complete(self) -> bool:
        return self.status in ("converged", "diverged")

    @property
    def final_error(self) -> float | None:
        return self.errors[-1] if self.errors else None

    def total_fine_cost(self) -> CostCounters:
        return CostCounters.total([cost for row in self.fine_costs for cost in row])

    def total_coarse_cost(self) -> CostCounters:
        return CostCounters.total([cost for row in self.coarse_costs for cost in row])


def accuracy_scale(system: OdeSystem, T: float, units: AccuracyUnits) -> float:
    """Divisor turning a global max-norm accuracy into normalized chart units."""
    if units == "normalized":
        return 1.0
    return float(T) * (1.0 + system.norm_of(system.u0))


def _max_deviation(system: OdeSystem, rows_a: Sequence[State], rows_b: Sequence[State]) -> float:
    return max(system.norm_of(np.asarray(a) - np.asarray(b)) for a, b in zip(rows_a, rows_b))


def coarse_sweep(
    system: OdeSystem,
    partition: TimePartition,
    cfg_coarse: SolverConfig,
    y_prev_row: Sequence[State] | None = None,
    fine_corrections: Sequence[State] | None = None,
    *,
    previous_coarse: Sequence[State] | None = None,
) -> CoarseSweep:
    """Sequential coarse pass; without a previous row this is the initial prediction."""
    correcting = y_prev_row is not None
    if correcting and fine_corrections is None:
        raise ValueError("fine corrections are required together with the previous row")

    costs = [CostCounters() for _ in range(partition.n_intervals)]
    old_values: list[State] | None = None
    if correcting and previous_coarse is None:
        assert y_prev_row is not None
        old_values = []
        for N in range(partition.n_intervals):
            result = _coarse_step(system, partition, cfg_coarse, y_prev_row[N], N)
            costs[N].absorb(result.cost)
            old_values.append(result.y_end)
    elif previous_coarse is not None:
        old_values = [np.asarray(value) for value in previous_coarse]

    row: list[State] = [np.array(system.u0, dtype=float)]
    new_values: list[State] = []
    for N in range(partition.n_intervals):
        result = _coarse_step(system, partition, cfg_coarse, row[N], N)
        costs[N].absorb(result.cost)
        new_values.append(result.y_end)
        if correcting:
            assert fine_corrections is not None and old_values is not None
            row.append(fine_corrections[N] + (result.y_end - old_values[N]))
        else:
            row.append(result.y_end)
    return CoarseSweep(row=row, costs=costs, coarse_values=new_values)


def _coarse_step(
    system: OdeSystem,
    partition: TimePartition,
    cfg_coarse: SolverConfig,
    y0: State,
    N: int,
) -> PropagationResult:
    t0, dt = partition.interval(N)
    if not np.all(np.isfinite(y0)):
        raise NumericalFailureError(
            "coarse propagation received a non-finite state",
            details={"interval": N, "t0": t0},
        )
    result = propagate(system, t0, dt, y0, cfg_coarse, interval=N)
    if not result.converged:
        raise NumericalFailureError(
            "coarse propagation failed",
            details={"interval": N, "t0": t0, "status": result.status, "message": result.message},
        )
    return result


def fine_stage(
    system: OdeSystem,
    partition: TimePartition,
    row: Sequence[State],
    zeta_row: Sequence[float],
    chart: AccuracyChart | None,
    cfg_fine: SolverConfig,
    history: WarmStartHistory | None = None,
    *,
    max_workers: int = 1,
    scale: float = 1.0,
) -> FineStage:
    """Fine propagation of every interval from row k, each at its own accuracy."""
    n_intervals = partition.n_intervals
    if len(zeta_row) != n_intervals:
        raise ValueError("zeta_row needs one accuracy per interval")
    if any(not zeta > 0 for zeta in zeta_row):
        raise ValueError("fine accuracies must be positive")

    configs: list[SolverConfig] = []
    for zeta in zeta_row:
        if chart is None:
            configs.append(cfg_fine)
        else:
            configs.append(cfg_fine.with_tolerance(tol_for_accuracy(chart, zeta / scale)))

    def _task(N: int) -> PropagationResult | None:
        if not np.all(np.isfinite(row[N])):
            return None
        t0, dt = partition.interval(N)
        return propagate(system, t0, dt, row[N], configs[N], history, interval=N)

    workers = max(1, min(int(max_workers), n_intervals))
    if workers == 1:
        results = [_task(N) for N in range(n_intervals)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, range(n_intervals)))

    stage = FineStage(
        corrections=[],
        costs=[],
        tols=[cfg.tolerance for cfg in configs],
    )
    for N, result in enumerate(results):
        if result is None:
            stage.corrections.append(None)
            stage.costs.append(CostCounters())
            stage.failures[N] = "non_finite_input"
            continue
        stage.costs.append(result.cost)
        if result.converged:
            stage.corrections.append(result.y_end)
        else:
            stage.corrections.append(None)
            stage.failures[N] = result.status
    return stage


def _calibrated_coarse(system: OdeSystem, eps_g: float, cfg: PararealConfig, scale: float) -> SolverConfig:
    if cfg.coarse_chart is None:
        return cfg.coarse
    return cfg.coarse.with_tolerance(tol_for_accuracy(cfg.coarse_chart, eps_g / scale))


def _fine_setup(cfg: PararealConfig, mode: ScheduleMode) -> tuple[SolverConfig, AccuracyChart | None]:
    if mode == "exact":
        return cfg.fine.with_tolerance(cfg.reference_tol), None
    return cfg.fine, cfg.fine_chart


def practical_K(classical_iterations: int) -> int:
    """Schedule length K reaching eta/2 in time for a run that the classical one finishes in the given iterations."""
    return max(1, int(classical_iterations) - PRACTICAL_SETTLE_ITERATIONS)


def estimate_practical_K(
    system: OdeSystem,
    partition: TimePartition,
    cfg_coarse: SolverConfig,
    eta: float,
    eps_g: float,
    *,
    coarse_chart: AccuracyChart | None = None,
    scale: float = 1.0,
    cap: int | None = None,
) -> int:
    """Schedule length K from a coarse-only rehearsal of the classical iteration count.

    The rehearsal uses the coarse method at accuracy eps_g**2 as fine stand-in and
    extrapolates the increment decay down to eta/4.
    """
    cap = partition.n_intervals if cap is None else cap
    if coarse_chart is not None:
        stand_in = cfg_coarse.with_tolerance(tol_for_accuracy(coarse_chart, eps_g**2 / scale))
    else:
        stand_in = cfg_coarse.with_tolerance(max(cfg_coarse.tolerance * eps_g, 1e-14))
    target = eta / 4.0

    sweep = coarse_sweep(system, partition, cfg_coarse)
    row, values = sweep.row, sweep.coarse_values
    increments: list[float] = []
    for k in range(cap):
        fine = fine_stage(system, partition, row, [eps_g**2] * partition.n_intervals, None, stand_in)
        if fine.failed:
            break
        corrections = [value for value in fine.corrections if value is not None]
        sweep = coarse_sweep(system, partition, cfg_coarse, row, corrections, previous_coarse=values)
        increment = _max_deviation(system, sweep.row, row)
        row, values = sweep.row, sweep.coarse_values
        increments.append(increment)
        if increment <= target:
            return practical_K(k + 1)
        if len(increments) >= 2 and increments[-1] >= increments[-2]:
            break

    if len(increments) >= 2 and 0 < increments[-1] < increments[-2]:
        ratio = increments[-1] / increments[-2]
        extra = math.ceil(math.log(target / increments[-1]) / math.log(ratio))
        estimate = len(increments) + max(0, extra)
    else:
        estimate = cap
    K = practical_K(min(max(estimate, 1), cap))
    logger.info("practical_K_estimated", extra={"problem": system.name, "detail": f"K={K}"})
    return K


def run_adaptive(
    system: OdeSystem,
    T: float,
    N_intervals: int,
    eta: float,
    eps_g: float,
    schedule_mode: ScheduleMode,
    cfg: PararealConfig | None = None,
    *,
    algorithm: str = "adaptive",
) -> PararealRun:
    cfg = cfg or PararealConfig()
    if not eta > 0 or not eps_g > 0:
        raise ConfigurationError("eta and eps_g must be positive", details={"eta": eta, "eps_g": eps_g})
    if N_intervals < 1:
        raise ConfigurationError("N_intervals must be at least 1", details={"N_intervals": N_intervals})

    scale = accuracy_scale(system, T, cfg.accuracy_units)
    coarse = _calibrated_coarse(system, eps_g, cfg, scale)
    if cfg.partition is not None:
        partition = cfg.partition
        if partition.n_intervals != N_intervals or not math.isclose(partition.T, T):
            raise ConfigurationError(
                "partition does not match the requested horizon and interval count",
                details={"n_intervals": partition.n_intervals, "T": partition.T},
            )
    elif cfg.balance:
        partition = balance_partition(system, T, N_intervals, coarse)
    else:
        partition = TimePartition.uniform(T, N_intervals)

    reference = cfg.reference
    if reference is None and (cfg.track_errors or cfg.update_nu):
        reference = reference_solve(system, T, partition, tol=cfg.reference_tol)
    if reference is not None and len(reference) != partition.n_intervals + 1:
        raise ConfigurationError("reference states do not match the partition")

    K = cfg.K
    if schedule_mode == "practical" and K is None:
        K = estimate_practical_K(
            system, partition, coarse, eta, eps_g, coarse_chart=cfg.coarse_chart, scale=scale
        )
    schedule = ToleranceSchedule(mode=schedule_mode, eps_g=eps_g, eta=eta, K=K, nu=cfg.nu)
    fine_cfg, fine_chart = _fine_setup(cfg, schedule_mode)
    k_max = cfg.k_max if cfg.k_max is not None else 2 * partition.n_intervals
    history = WarmStartHistory() if fine_cfg.method == "radau_iia5" and schedule_mode != "exact" else None

    run = PararealRun(
        algorithm=algorithm,
        system_name=system.name,
        partition=partition,
        schedule=schedule,
        eta=eta,
        eps_g=eps_g,
        coarse_tol=coarse.tolerance,
        errors=[] if reference is not None and cfg.track_errors else None,
        dim=system.dim,
    )
    reference_scale = max(1.0 + system.norm_of(state) for state in reference) if reference is not None else None

    sweep = coarse_sweep(system, partition, coarse)
    _append_row(run, system, sweep, reference)
    coarse_error = _max_deviation(system, run.states[0], reference) if reference is not None else eps_g
    if coarse_error <= eta / 2.0:
        return _finish(run, "converged", 0)

    for k in range(k_max):
        zeta_k = schedule.zeta(k)
        if history is not None:
            history.begin_iteration(k)
        fine = fine_stage(
            system,
            partition,
            run.states[k],
            [zeta_k] * partition.n_intervals,
            fine_chart,
            fine_cfg,
            history,
            max_workers=cfg.max_workers,
            scale=scale,
        )
        if history is not None:
            history.commit()
        run.zetas.append(zeta_k)
        run.fine_tols.append(fine.tols)
        run.fine_costs.append(fine.costs)
        if fine.failed:
            run.failure = {"stage": "fine", "iteration": k, "intervals": fine.failures}
            logger.error(
                "fine_stage_failed",
                extra={"problem": system.name, "algorithm": algorithm, "iteration": k, "detail": fine.failures},
            )
            return _finish(run, "failed", None)

        corrections = [value for value in fine.corrections if value is not None]
        sweep = coarse_sweep(
            system,
            partition,
            coarse,
            run.states[k],
            corrections,
            previous_coarse=sweep.coarse_values,
        )
        increment = _append_row(run, system, sweep, reference)
        observe_iteration(algorithm)
        logger.info(
            "parareal_iteration",
            extra={
                "problem": system.name,
                "algorithm": algorithm,
                "iteration": k + 1,
                "zeta": zeta_k,
                "increment": increment,
                "max_error": run.errors[-1] if run.errors else None,
            },
        )

        if cfg.update_nu and reference_scale is not None and schedule_mode == "theoretical":
            current = max(1.0 + system.norm_of(state) for state in run.states[k + 1])
            schedule = schedule.with_nu(k + 1, current / reference_scale)
            run.schedule = schedule

        if increment is not None and increment <= eta / 4.0 and zeta_k <= eta / 2.0:
            return _finish(run, "converged", k + 1)

    logger.warning(
        "parareal_diverged",
        extra={"problem": system.name, "algorithm": algorithm, "iteration": k_max},
    )
    return _finish(run, "diverged", None)


def _append_row(
    run: PararealRun,
    system: OdeSystem,
    sweep: CoarseSweep,
    reference: Sequence[State] | None,
) -> float | None:
    row = np.vstack(sweep.row)
    increment = None
    if run.states:
        increment = _max_deviation(system, row, run.states[-1])
    run.states.append(row)
    run.coarse_costs.append(sweep.costs)
    run.increments.append(increment)
    if run.errors is not None and reference is not None:
        run.errors.append(_max_deviation(system, row, reference))
    return increment


def _finish(run: PararealRun, status: RunStatus, converged_at: int | None) -> PararealRun:
    run.status = status
    run.converged_at = converged_at
    return run


def run_classical(
    system: OdeSystem,
    T: float,
    N_intervals: int,
    eta: float,
    eps_g: float,
    cfg: PararealConfig | None = None,
) -> PararealRun:
    """Classical parareal: fine accuracy fixed at eta/2 in every iteration."""
    return run_adaptive(system, T, N_intervals, eta, eps_g, "fixed", cfg, algorithm="classical")
