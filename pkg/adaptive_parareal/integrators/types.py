from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

Method = Literal["explicit_rk54", "radau_iia5", "explicit_euler"]
WarmStart = Literal["previous_time", "previous_iteration", "dynamics_corrected"]
PropagationStatus = Literal["converged", "step_size_underflow", "newton_failure"]

COUNTER_FIELDS = ("accepted_steps", "rejected_steps", "rhs_evals", "jac_evals", "lin_solves")


class SolverConfig(BaseModel):
    """Solver definition: method plus its local tolerance parameters.

    ``explicit_euler`` is a fixed-step method; ``h_init`` sets its step, and when
    unset the whole interval is covered by a single step.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Method = "explicit_rk54"
    atol: float = Field(default=1e-6, gt=0)
    rtol: float = Field(default=1e-6, gt=0)
    h_init: float | None = Field(default=None, gt=0)
    h_min: float = Field(default=1e-14, gt=0)
    h_max: float = Field(default=1e6, gt=0)
    newton_max_iters: int = Field(default=7, gt=0)
    newton_tol: float = Field(default=0.03, gt=0)
    warm_start: WarmStart = "previous_time"

    @model_validator(mode="after")
    def _check_step_bounds(self) -> "SolverConfig":
        if self.h_min > self.h_max:
            raise ValueError("h_min must not exceed h_max")
        return self

    def with_tolerance(self, tol: float) -> "SolverConfig":
        return self.model_copy(update={"atol": float(tol), "rtol": float(tol)})

    @property
    def tolerance(self) -> float:
        return max(self.atol, self.rtol)


@dataclass
class CostCounters:
    accepted_steps: int = 0
    rejected_steps: int = 0
    rhs_evals: int = 0
    jac_evals: int = 0
    lin_solves: int = 0

    def merge(self, other: "CostCounters") -> "CostCounters":
        return CostCounters(**{name: getattr(self, name) + getattr(other, name) for name in COUNTER_FIELDS})

    __add__ = merge

    def absorb(self, other: "CostCounters") -> None:
        for name in COUNTER_FIELDS:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    @property
    def total_steps(self) -> int:
        return self.accepted_steps + self.rejected_steps

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def total(cls, counters: "list[CostCounters]") -> "CostCounters":
        result = cls()
        for item in counters:
            result.absorb(item)
        return result


@dataclass(frozen=True)
class PropagationResult:
    y_end: NDArray[np.float64]
    cost: CostCounters
    t0: float
    dt: float
    status: PropagationStatus = "converged"
    step_times: NDArray[np.float64] | None = field(default=None, repr=False)
    message: str | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt
