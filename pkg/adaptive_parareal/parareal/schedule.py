from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from typing import Literal

ScheduleMode = Literal["theoretical", "practical", "fixed", "exact"]
SCHEDULE_MODES = ("theoretical", "practical", "fixed", "exact")
EXACT_ZETA = 1e-13


@dataclass(frozen=True)
class ToleranceSchedule:
    """Fine accuracies zeta_k per parareal iteration.

    ``exact`` forces the fine solver to the reference band; the zeta it reports
    is nominal.
    """

    mode: ScheduleMode
    eps_g: float
    eta: float
    K: int | None = None
    nu: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in SCHEDULE_MODES:
            raise ValueError(f"unknown schedule mode: {self.mode}")
        if not (self.eps_g > 0 and self.eta > 0):
            raise ValueError("eps_g and eta must be positive")
        if self.mode == "practical" and (self.K is None or self.K < 1):
            raise ValueError("practical schedule requires K >= 1")
        if any(value <= 0 for value in self.nu):
            raise ValueError("nu entries must be positive")

    def nu_at(self, p: int) -> float:
        return self.nu[p] if p < len(self.nu) else 1.0

    def with_nu(self, p: int, value: float) -> "ToleranceSchedule":
        values = list(self.nu) + [1.0] * max(0, p + 1 - len(self.nu))
        values[p] = float(value)
        return replace(self, nu=tuple(values))

    def zeta(self, k: int) -> float:
        return schedule_zeta(self, k)


def schedule_zeta(schedule: ToleranceSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    half_eta = schedule.eta / 2.0
    if schedule.mode == "fixed":
        return half_eta
    if schedule.mode == "exact":
        return EXACT_ZETA
    if schedule.mode == "practical":
        K = int(schedule.K or 1)
        if k >= K - 1:
            return half_eta
        weight = (k + 1) / K
        return schedule.eps_g ** (1.0 - weight) * half_eta**weight
    if k < 150:
        value = schedule.eps_g ** (k + 2) / (math.factorial(k + 1) * schedule.nu_at(k))
    else:
        log_value = (k + 2) * math.log(schedule.eps_g) - math.lgamma(k + 2) - math.log(schedule.nu_at(k))
        value = math.exp(max(log_value, -745.0))
    return max(value, sys.float_info.min)
