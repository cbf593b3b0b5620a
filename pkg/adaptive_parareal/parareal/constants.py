"""Empirical convergence constants of a coarse solver.

``C_c`` bounds the growth of the coarse propagator's Lipschitz quotient per unit
time, ``C_d`` the Lipschitz behavior of its defect against the exact propagator,
and ``eps_g`` the defect itself. All three are in normalized accuracy units.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from adaptive_parareal.calibration import AccuracyChart
from adaptive_parareal.errors import CalibrationError, ConfigurationError
from adaptive_parareal.integrators import REFERENCE_TOL, SolverConfig, propagate, reference_config, reference_solve
from adaptive_parareal.parareal.partition import TimePartition
from adaptive_parareal.problems import OdeSystem

MIN_CONSTANT_SAMPLES = 10
DEGENERATE_DISTANCE = 1e-12

logger = logging.getLogger("adaptive_parareal.parareal")


@dataclass(frozen=True)
class HypothesisConstants:
    C_c: float
    C_d: float
    eps_g: float
    T: float
    dT: float
    max_norm: float

    def __post_init__(self) -> None:
        for name in ("C_c", "C_d", "eps_g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and nonnegative")
        if not (self.T > 0 and self.dT > 0 and self.max_norm >= 1.0):
            raise ValueError("T, dT must be positive and max_norm at least 1")

    @property
    def eps_bar(self) -> float:
        """Largest coarse accuracy for which the ideal iteration contracts."""
        if self.C_d == 0:
            return math.inf
        return math.exp(self.C_c * self.dT) / (self.C_d * self.T)

    @property
    def tau(self) -> float:
        eps_bar = self.eps_bar
        return 0.0 if math.isinf(eps_bar) else self.eps_g / eps_bar

    @property
    def tau_tilde(self) -> float:
        return self.tau + self.eps_g

    @property
    def mu(self) -> float:
        if self.C_d == 0:
            return math.inf
        return math.exp(self.C_c * self.T) / self.C_d * self.max_norm

    def inflated(self, factor: float) -> "HypothesisConstants":
        if not factor >= 1.0:
            raise ValueError("inflation factor must be at least 1")
        return replace(self, C_c=self.C_c * factor, C_d=self.C_d * factor, eps_g=self.eps_g * factor)

    def as_dict(self) -> dict[str, float]:
        return {
            "C_c": self.C_c,
            "C_d": self.C_d,
            "eps_g": self.eps_g,
            "eps_bar": self.eps_bar,
            "tau": self.tau,
            "tau_tilde": self.tau_tilde,
            "mu": self.mu,
        }


def _coarse_end(
    system: OdeSystem,
    cfg: SolverConfig,
    t0: float,
    dt: float,
    state: NDArray[np.float64],
) -> NDArray[np.float64] | None:
    result = propagate(system, t0, dt, state, cfg)
    return result.y_end if result.converged else None


def estimate_constants(
    system: OdeSystem,
    T: float,
    partition: TimePartition,
    cfg_coarse: SolverConfig,
    n_samples: int = MIN_CONSTANT_SAMPLES,
    *,
    chart: AccuracyChart | None = None,
    reference: Sequence[NDArray[np.float64]] | None = None,
    seed: int = 0,
    spread: float = 0.05,
    reference_tol: float = REFERENCE_TOL,
) -> HypothesisConstants:
    """Sample state pairs around the reference trajectory and measure the coarse constants.

    Sample points are random perturbations of the reference state at a random
    interval start; the coarse and reference propagators are both run over that
    interval.
    """
    if n_samples < MIN_CONSTANT_SAMPLES:
        raise ConfigurationError(
            f"constant estimation needs at least {MIN_CONSTANT_SAMPLES} samples",
            details={"n_samples": n_samples},
        )
    if not math.isclose(partition.T, T):
        raise ConfigurationError("partition horizon does not match T", details={"T": T, "partition_T": partition.T})
    if reference is None:
        reference = reference_solve(system, T, partition, tol=reference_tol)
    if len(reference) != partition.n_intervals + 1:
        raise ConfigurationError("reference states do not match the partition")

    exact = reference_config(reference_tol)
    rng = np.random.default_rng(seed)
    growth: list[float] = []
    defects: list[float] = []
    defect_pairs: list[tuple[float, float]] = []
    skipped = 0

    for _ in range(n_samples):
        N = int(rng.integers(partition.n_intervals))
        t0, s = partition.interval(N)
        base = np.asarray(reference[N], dtype=float)
        radius = spread * (1.0 + system.norm_of(base))
        x = base + radius * rng.standard_normal(system.dim)
        y = base + radius * rng.standard_normal(system.dim)
        distance = system.norm_of(x - y)

        gx = _coarse_end(system, cfg_coarse, t0, s, x)
        gy = _coarse_end(system, cfg_coarse, t0, s, y)
        ex = _coarse_end(system, exact, t0, s, x)
        ey = _coarse_end(system, exact, t0, s, y)
        if gx is None or gy is None or ex is None or ey is None:
            skipped += 1
            continue

        delta_x = ex - gx
        delta_y = ey - gy
        defects.append(system.norm_of(delta_x) / (s * (1.0 + system.norm_of(x))))
        defects.append(system.norm_of(delta_y) / (s * (1.0 + system.norm_of(y))))
        if distance < DEGENERATE_DISTANCE:
            skipped += 1
            continue
        growth.append(abs(system.norm_of(gx - gy) / distance - 1.0) / s)
        defect_pairs.append((system.norm_of(delta_x - delta_y) / (s * distance), s))

    if not growth:
        raise CalibrationError(
            "no usable samples for constant estimation",
            details={"n_samples": n_samples, "skipped": skipped},
        )

    eps_g = max(defects)
    if chart is not None:
        eps_g = max(eps_g, chart.eps_for_tol(cfg_coarse.tolerance))
    C_c = max(0.0, max(growth))
    C_d = 0.0 if eps_g == 0 else max(value for value, _s in defect_pairs) / eps_g
    max_norm = max(1.0 + system.norm_of(state) for state in reference)

    constants = HypothesisConstants(
        C_c=C_c,
        C_d=C_d,
        eps_g=eps_g,
        T=float(T),
        dT=partition.max_width,
        max_norm=max_norm,
    )
    logger.info(
        "constants_estimated",
        extra={
            "problem": system.name,
            "method": cfg_coarse.method,
            "detail": {key: f"{value:.4e}" for key, value in constants.as_dict().items()} | {"skipped": skipped},
        },
    )
    return constants
