from typing import Any

import numpy as np
import pytest

from adaptive_parareal.calibration import AccuracyChart
from adaptive_parareal.config import Config
from adaptive_parareal.integrators import CostCounters
from adaptive_parareal.parareal import PararealRun, TimePartition, ToleranceSchedule
from adaptive_parareal.problems import make_linear
from adaptive_parareal.schemas import RunConfig, parse_run_config


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: 벤치마크 문제 대상 수락 기준 검증 (느림, 기본 제외)")


def build_test_config(**overrides: Any) -> Config:
    defaults: dict[str, Any] = {
        "APP_ENV": "test",
        "LOG_LEVEL": "WARNING",
        "LOG_JSON": False,
        "MAX_WORKERS": 1,
        "REFERENCE_TOL": 1e-13,
        "CHART_CHECKPOINTS": 4,
        "METRICS_EXPORT_PATH": "",
    }
    defaults.update(overrides)
    return Config.model_validate(defaults)


def build_run_config_data(**sections: Any) -> dict[str, Any]:
    """Small linear decay run: u' = -u on [0, 2] with explicit solvers only."""
    data: dict[str, Any] = {
        "problem": {"name": "linear", "T": 2.0, "params": {"lam": -1.0}},
        "partition": {"n_intervals": 4, "balance": False},
        "schedule": {"mode": "theoretical", "eta": 1e-6, "eps_g": 0.1},
        "solvers": {
            "coarse": {"method": "explicit_rk54"},
            "fine": {"method": "explicit_rk54"},
        },
        "calibration": {
            "coarse_tolerances": [1e-2, 1e-3, 1e-4, 1e-5],
            "fine_tolerances": [1e-4, 1e-6, 1e-8, 1e-10, 1e-12],
            "checkpoints": 4,
        },
        "cost_model": {"mode": "measured"},
    }
    for name, value in sections.items():
        data[name] = _merge_section(data.get(name), value)
    return data


def _merge_section(base: Any, override: Any) -> Any:
    """Nested merge; a section naming another problem replaces the base wholesale."""
    if not isinstance(override, dict) or not isinstance(base, dict):
        return override
    if "name" in override and override["name"] != base.get("name"):
        return dict(override)
    merged = dict(base)
    for key, value in override.items():
        merged[key] = _merge_section(base.get(key), value)
    return merged


def build_run_config(*, source_path: str | None = None, **sections: Any) -> RunConfig:
    return parse_run_config(build_run_config_data(**sections), source_path=source_path)


def build_synthetic_chart(*, system_id: str = "linear(lam=-1.0)", method: str = "explicit_rk54", T: float = 2.0) -> AccuracyChart:
    return AccuracyChart(
        tols=(1e-8, 1e-6, 1e-4, 1e-2),
        eps=(1e-7, 1e-5, 1e-3, 1e-1),
        system_id=system_id,
        method=method,
        T=T,
        checkpoints=4,
    )


def build_finished_run(
    *,
    n_intervals: int = 4,
    T: float = 1.0,
    zetas: tuple[float, ...] = (1e-2,),
    fine_rhs: int = 10,
    coarse_rhs: int = 0,
    status: str = "converged",
    eta: float = 1e-6,
    eps_g: float = 0.1,
) -> PararealRun:
    """Run record with uniform per-interval costs, for cost aggregation checks."""
    partition = TimePartition.uniform(T, n_intervals)
    iterations = len(zetas)
    run = PararealRun(
        algorithm="adaptive",
        system_name="linear",
        partition=partition,
        schedule=ToleranceSchedule(mode="theoretical", eps_g=eps_g, eta=eta),
        eta=eta,
        eps_g=eps_g,
        coarse_tol=1e-3,
        dim=1,
    )
    for _k in range(iterations + 1):
        run.states.append(np.ones((n_intervals + 1, 1)))
        run.coarse_costs.append([CostCounters(rhs_evals=coarse_rhs) for _ in range(n_intervals)])
    for zeta in zetas:
        run.zetas.append(zeta)
        run.fine_tols.append([1e-6] * n_intervals)
        run.fine_costs.append([CostCounters(rhs_evals=fine_rhs) for _ in range(n_intervals)])
    run.status = status  # type: ignore[assignment]
    run.converged_at = iterations if status == "converged" else None
    return run


@pytest.fixture
def decay_system():
    return make_linear(-1.0)


@pytest.fixture
def settings():
    return build_test_config()
