"""Radau IIA (3 stages, order 5) with simplified Newton on the stacked stage system."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import lu_factor, lu_solve

from adaptive_parareal.integrators.control import error_norm, reached, select_initial_step, step_controller
from adaptive_parareal.integrators.types import CostCounters, PropagationResult, SolverConfig
from adaptive_parareal.integrators.warm_start import WarmStartHistory, newton_initial_guess
from adaptive_parareal.problems import OdeSystem

S6 = math.sqrt(6.0)
RADAU_C = np.array([(4.0 - S6) / 10.0, (4.0 + S6) / 10.0, 1.0])
RADAU_A = np.array(
    [
        [(88.0 - 7.0 * S6) / 360.0, (296.0 - 169.0 * S6) / 1800.0, (-2.0 + 3.0 * S6) / 225.0],
        [(296.0 + 169.0 * S6) / 1800.0, (88.0 + 7.0 * S6) / 360.0, (-2.0 - 3.0 * S6) / 225.0],
        [(16.0 - S6) / 36.0, (16.0 + S6) / 36.0, 1.0 / 9.0],
    ]
)
RADAU_E = np.array([-13.0 - 7.0 * S6, -13.0 + 7.0 * S6, -1.0]) / 3.0
MU_REAL = 3.0 + 3.0 ** (2.0 / 3.0) - 3.0 ** (1.0 / 3.0)
RADAU_ERROR_ORDER = 3
MAX_NEWTON_RETRIES = 8
EPS = np.finfo(float).eps


class _StepFactory:
    """Jacobian and LU factorizations for the current step size."""

    def __init__(self, system: OdeSystem, cost: CostCounters) -> None:
        self.system = system
        self.cost = cost
        self.jac: NDArray[np.float64] | None = None
        self._h: float | None = None
        self.lu_newton = None
        self.lu_real = None

    def refresh_jacobian(self, t: float, y: NDArray[np.float64]) -> None:
        self.jac = self.system.jacobian_at(t, y)
        self.cost.jac_evals += 1
        if self.system.jacobian is None:
            self.cost.rhs_evals += self.system.dim + 1
        self._h = None

    def factor(self, h: float) -> None:
        if self._h == h and self.lu_newton is not None:
            return
        assert self.jac is not None
        dim = self.system.dim
        self.lu_newton = lu_factor(np.eye(3 * dim) - h * np.kron(RADAU_A, self.jac))
        self.lu_real = lu_factor(MU_REAL / h * np.eye(dim) - self.jac)
        self._h = h

    def solve_newton(self, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        self.cost.lin_solves += 1
        return lu_solve(self.lu_newton, rhs)

    def solve_real(self, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        self.cost.lin_solves += 1
        return lu_solve(self.lu_real, rhs)


def _newton(
    system: OdeSystem,
    factory: _StepFactory,
    t: float,
    y: NDArray[np.float64],
    h: float,
    Z0: NDArray[np.float64],
    cfg: SolverConfig,
) -> tuple[bool, NDArray[np.float64], float | None]:
    dim = system.dim
    scale = cfg.atol + cfg.rtol * np.abs(y)
    tol = max(10.0 * EPS / cfg.rtol, min(cfg.newton_tol, math.sqrt(cfg.rtol)))
    Z = Z0.copy()
    F = np.empty((3, dim), dtype=float)
    dZ_norm_old: float | None = None
    rate: float | None = None
    for iteration in range(cfg.newton_max_iters):
        for stage in range(3):
            F[stage] = system.rhs(t + RADAU_C[stage] * h, y + Z[stage])
        factory.cost.rhs_evals += 3
        if not np.all(np.isfinite(F)):
            return False, Z, rate
        residual = Z - h * (RADAU_A @ F)
        dZ = factory.solve_newton(-residual.reshape(-1)).reshape(3, dim)
        dZ_norm = float(np.max(np.abs(dZ) / scale))
        if dZ_norm_old is not None:
            rate = dZ_norm / dZ_norm_old if dZ_norm_old > 0 else 0.0
            remaining = cfg.newton_max_iters - iteration
            if rate >= 1.0 or rate**remaining / (1.0 - rate) * dZ_norm > tol:
                return False, Z, rate
        Z += dZ
        if dZ_norm == 0.0 or (rate is not None and rate / (1.0 - rate) * dZ_norm < tol):
            return True, Z, rate
        dZ_norm_old = dZ_norm
    return False, Z, rate


def radau_propagate(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: NDArray[np.float64],
    cfg: SolverConfig,
    history: WarmStartHistory | None = None,
    *,
    interval: int = 0,
) -> PropagationResult:
    cost = CostCounters()
    factory = _StepFactory(system, cost)
    t_end = t0 + dt
    t = t0
    y = np.array(y0, dtype=float)
    f = np.asarray(system.rhs(t, y), dtype=float)
    cost.rhs_evals += 1
    if cfg.h_init is not None:
        h = cfg.h_init
    else:
        h = select_initial_step(
            system.rhs, t, y, f, RADAU_ERROR_ORDER, cfg.atol, cfg.rtol, interval=dt, h_max=cfg.h_max
        )
        cost.rhs_evals += 1
    h = max(cfg.h_min, min(h, cfg.h_max))

    k = history.iteration if history is not None else 0
    if history is not None:
        history.reset_interval(interval)
        history.record(interval, 0, np.tile(y, (3, 1)), t=t)
    previous_stages = np.tile(y, (3, 1))
    node = 0
    step_times: list[float] = []
    first_step = True
    rejected_last = False

    def _failure(status: str, message: str) -> PropagationResult:
        return PropagationResult(
            y_end=y,
            cost=cost,
            t0=t0,
            dt=dt,
            status=status,  # type: ignore[arg-type]
            step_times=np.array(step_times),
            message=message,
        )

    factory.refresh_jacobian(t, y)
    while not reached(t, t_end):
        last = t + h >= t_end
        if last:
            h = t_end - t

        guess = newton_initial_guess(
            cfg.warm_start, history, interval, node + 1, k, previous_stages, t_end=t + h, h=h
        )
        from_history = guess is not previous_stages
        retries = 0
        while True:
            factory.factor(h)
            converged, Z, _rate = _newton(system, factory, t, y, h, guess - y, cfg)
            if converged:
                break
            if from_history:
                guess, from_history = previous_stages, False
            else:
                retries += 1
                if retries > MAX_NEWTON_RETRIES:
                    return _failure("newton_failure", f"newton did not converge at t={t:.6g}")
                h *= 0.5
                last = False
                if h < cfg.h_min or t + h == t:
                    return _failure("step_size_underflow", f"step size fell below h_min at t={t:.6g}")
                cost.rejected_steps += 1

        y_new = y + Z[-1]
        ZE = (Z.T @ RADAU_E) / h
        err = factory.solve_real(f + ZE)
        err_norm = error_norm(err, y, y_new, cfg.atol, cfg.rtol)
        if err_norm > 1.0 and (first_step or rejected_last):
            err = factory.solve_real(np.asarray(system.rhs(t, y + err), dtype=float) + ZE)
            cost.rhs_evals += 1
            err_norm = error_norm(err, y, y_new, cfg.atol, cfg.rtol)
        if not math.isfinite(err_norm):
            err_norm = 1e10

        accept, h_next = step_controller(err_norm, RADAU_ERROR_ORDER, h, h_min=cfg.h_min, h_max=cfg.h_max)
        if not accept:
            cost.rejected_steps += 1
            rejected_last = True
            if h <= cfg.h_min or t + h_next == t:
                return _failure("step_size_underflow", f"step size fell below h_min at t={t:.6g}")
            h = h_next
            continue

        t = t_end if last else t + h
        y = y_new
        f = np.asarray(system.rhs(t, y), dtype=float)
        cost.rhs_evals += 1
        cost.accepted_steps += 1
        step_times.append(t)
        node += 1
        previous_stages = y - Z[-1] + Z
        if history is not None:
            history.record(interval, node, previous_stages, t=t)
        first_step = False
        rejected_last = False
        # step sequence must not depend on the Newton starting guess
        if not last:
            factory.refresh_jacobian(t, y)
        h = h_next

    return PropagationResult(y_end=y, cost=cost, t0=t0, dt=dt, step_times=np.array(step_times))


def radau_fixed_step(
    system: OdeSystem,
    t0: float,
    dt: float,
    y0: NDArray[np.float64],
    n_steps: int,
    cfg: SolverConfig,
) -> PropagationResult:
    """Constant steps without error control; Jacobian refreshed every step."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    cost = CostCounters()
    factory = _StepFactory(system, cost)
    h = dt / n_steps
    y = np.array(y0, dtype=float)
    times = t0 + h * np.arange(1, n_steps + 1)
    for step in range(n_steps):
        t = t0 + step * h
        factory.refresh_jacobian(t, y)
        factory.factor(h)
        converged, Z, _rate = _newton(system, factory, t, y, h, np.zeros((3, system.dim)), cfg)
        if not converged:
            return PropagationResult(
                y_end=y,
                cost=cost,
                t0=t0,
                dt=dt,
                status="newton_failure",
                step_times=times[:step],
                message=f"newton did not converge at t={t:.6g}",
            )
        y = y + Z[-1]
        cost.accepted_steps += 1
    return PropagationResult(y_end=y, cost=cost, t0=t0, dt=dt, step_times=times)
