"""Benchmark ODE systems and the generic system container.

Every system is written in the form ``u' = rhs(t, u)``. Systems are immutable
and may be shared between worker threads.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from adaptive_parareal.errors import ConfigurationError

FloatArray = NDArray[np.float64]
RhsFn = Callable[[float, FloatArray], FloatArray]
JacobianFn = Callable[[float, FloatArray], FloatArray]
NormKind = Literal["max", "euclidean"]

FD_STEP_SCALE = math.sqrt(np.finfo(float).eps)

OREGONATOR_DEFAULTS = {"s": 77.27, "q": 8.375e-6, "w": 0.161}
SEIR_DEFAULTS = {
    "N0": 14.0e6,
    "E0": 40.0,
    "I0": 10.0,
    "beta0": 0.5944,
    "alpha": 0.4239,
    "kappa": 1117.3,
    "sigma": 1.0 / 3.0,
    "gamma": 1.0 / 5.0,
    "d": 0.2,
    "lam": 1.0 / 11.2,
    "mu": 5.6e-5,
    "F": 10.0,
    "action_time": 23.0,
    "importation_end": 23.0,
}
SEIR_COMPARTMENTS = ("S", "E", "I", "R", "N", "D", "C")


def state_norm(vector: ArrayLike, kind: NormKind = "max") -> float:
    values = np.asarray(vector, dtype=float)
    if values.size == 0:
        return 0.0
    if kind == "euclidean":
        return float(np.linalg.norm(values))
    return float(np.max(np.abs(values)))


@dataclass(frozen=True, eq=False)
class OdeSystem:
    name: str
    dim: int
    rhs: RhsFn = field(repr=False)
    u0: FloatArray = field(repr=False)
    jacobian: JacobianFn | None = field(default=None, repr=False)
    params: Mapping[str, float] = field(default_factory=dict)
    norm: NormKind = "max"

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ConfigurationError("system dimension must be positive", details={"dim": self.dim})
        u0 = np.array(self.u0, dtype=float).reshape(-1)
        if u0.shape != (self.dim,):
            raise ConfigurationError(
                "initial state does not match system dimension",
                details={"dim": self.dim, "u0_shape": list(u0.shape)},
            )
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        if self.norm not in ("max", "euclidean"):
            raise ConfigurationError("norm must be one of: max, euclidean", details={"norm": self.norm})

    @property
    def fingerprint(self) -> str:
        items = ",".join(f"{key}={self.params[key]!r}" for key in sorted(self.params))
        return f"{self.name}({items})"

    def norm_of(self, vector: ArrayLike) -> float:
        return state_norm(vector, self.norm)

    def jacobian_at(self, t: float, u: FloatArray) -> FloatArray:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(t, u), dtype=float)
        return finite_difference_jacobian(self, t, u)


def finite_difference_jacobian(system: OdeSystem, t: float, u: ArrayLike) -> FloatArray:
    """Forward differences with per-column step sqrt(eps)*max(|u_j|, 1)."""
    base = np.asarray(u, dtype=float)
    f0 = np.asarray(system.rhs(t, base), dtype=float)
    jac = np.empty((system.dim, system.dim), dtype=float)
    for j in range(system.dim):
        h = FD_STEP_SCALE * max(abs(base[j]), 1.0)
        shifted = base.copy()
        shifted[j] += h
        # recover the step actually representable in floating point
        h = shifted[j] - base[j]
        jac[:, j] = (np.asarray(system.rhs(t, shifted), dtype=float) - f0) / h
    return jac


def _require_positive(params: Mapping[str, float], names: tuple[str, ...], system: str) -> None:
    for name in names:
        value = params[name]
        if not math.isfinite(value) or value <= 0:
            raise ConfigurationError(
                f"{system} parameter {name} must be positive",
                details={"system": system, "parameter": name, "value": value},
            )


def _merge_params(defaults: Mapping[str, float], overrides: Mapping[str, Any] | None, system: str) -> dict[str, float]:
    merged = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in defaults:
            raise ConfigurationError(
                f"unknown {system} parameter: {key}",
                details={"system": system, "parameter": key, "allowed": sorted(defaults)},
            )
        merged[key] = float(value)
    return merged


def make_brusselator(A: float = 1.0, B: float = 3.0, *, norm: NormKind = "max") -> OdeSystem:
    params = {"A": float(A), "B": float(B)}
    _require_positive(params, ("A", "B"), "brusselator")
    a, b = params["A"], params["B"]

    def rhs(t: float, u: FloatArray) -> FloatArray:
        x, y = u[0], u[1]
        return np.array([a + x * x * y - (b + 1.0) * x, b * x - x * x * y])

    def jacobian(t: float, u: FloatArray) -> FloatArray:
        x, y = u[0], u[1]
        return np.array([[2.0 * x * y - (b + 1.0), x * x], [b - 2.0 * x * y, -x * x]])

    return OdeSystem(
        name="brusselator",
        dim=2,
        rhs=rhs,
        jacobian=jacobian,
        u0=np.array([0.0, 1.0]),
        params=params,
        norm=norm,
    )


def make_van_der_pol(mu: float = 4.0, *, norm: NormKind = "max") -> OdeSystem:
    mu = float(mu)
    if not math.isfinite(mu) or mu < 0:
        raise ConfigurationError("van_der_pol parameter mu must be nonnegative", details={"mu": mu})

    def rhs(t: float, u: FloatArray) -> FloatArray:
        x, y = u[0], u[1]
        return np.array([y, mu * (1.0 - x * x) * y - x])

    def jacobian(t: float, u: FloatArray) -> FloatArray:
        x, y = u[0], u[1]
        return np.array([[0.0, 1.0], [-2.0 * mu * x * y - 1.0, mu * (1.0 - x * x)]])

    return OdeSystem(
        name="van_der_pol",
        dim=2,
        rhs=rhs,
        jacobian=jacobian,
        u0=np.array([2.0, 0.0]),
        params={"mu": mu},
        norm=norm,
    )


def make_oregonator(params: Mapping[str, Any] | None = None, *, norm: NormKind = "max") -> OdeSystem:
    """Scaled three-variable Field-Noyes model with the classical stiff constants."""
    values = _merge_params(OREGONATOR_DEFAULTS, params, "oregonator")
    _require_positive(values, tuple(OREGONATOR_DEFAULTS), "oregonator")
    s, q, w = values["s"], values["q"], values["w"]

    def rhs(t: float, u: FloatArray) -> FloatArray:
        y1, y2, y3 = u[0], u[1], u[2]
        return np.array(
            [
                s * (y2 - y1 * y2 + y1 - q * y1 * y1),
                (-y2 - y1 * y2 + y3) / s,
                w * (y1 - y3),
            ]
        )

    def jacobian(t: float, u: FloatArray) -> FloatArray:
        y1, y2 = u[0], u[1]
        return np.array(
            [
                [s * (1.0 - y2 - 2.0 * q * y1), s * (1.0 - y1), 0.0],
                [-y2 / s, -(1.0 + y1) / s, 1.0 / s],
                [w, 0.0, -w],
            ]
        )

    return OdeSystem(
        name="oregonator",
        dim=3,
        rhs=rhs,
        jacobian=jacobian,
        u0=np.array([1.0, 2.0, 3.0]),
        params=values,
        norm=norm,
    )


def oregonator_steady_state(system: OdeSystem) -> FloatArray:
    q = system.params["q"]
    y1 = 4.0 / (q + math.sqrt(q * q + 8.0 * q))
    return np.array([y1, y1 / (1.0 + y1), y1])


def make_seir(params: Mapping[str, Any] | None = None, *, norm: NormKind = "max") -> OdeSystem:
    """SEIR model with individual reaction and governmental action terms.

    States are (S, E, I, R, N, D, C): susceptible, exposed, infectious, removed,
    total population, public perception of risk, cumulative cases.
    """
    values = _merge_params(SEIR_DEFAULTS, params, "seir")
    _require_positive(values, ("N0", "beta0", "sigma", "gamma", "lam"), "seir")
    for key in ("E0", "I0", "alpha", "kappa", "d", "mu", "F", "action_time", "importation_end"):
        if not math.isfinite(values[key]) or values[key] < 0:
            raise ConfigurationError(
                f"seir parameter {key} must be nonnegative",
                details={"system": "seir", "parameter": key, "value": values[key]},
            )
    if values["alpha"] >= 1.0:
        raise ConfigurationError("seir parameter alpha must be below 1", details={"alpha": values["alpha"]})

    beta0 = values["beta0"]
    alpha = values["alpha"]
    kappa = values["kappa"]
    sigma = values["sigma"]
    gamma = values["gamma"]
    d = values["d"]
    lam = values["lam"]
    mu = values["mu"]
    importation = values["F"]
    action_time = values["action_time"]
    importation_end = values["importation_end"]

    def rhs(t: float, u: FloatArray) -> FloatArray:
        s_, e_, i_, r_, n_, d_, _c = u
        action = alpha if t >= action_time else 0.0
        imported = importation if t < importation_end else 0.0
        perception = max(1.0 - d_ / n_, 0.0)
        beta = beta0 * (1.0 - action) * perception**kappa
        infection = beta0 * s_ * imported / n_ + beta * s_ * i_ / n_
        return np.array(
            [
                -infection - mu * s_,
                infection - (sigma + mu) * e_,
                sigma * e_ - (gamma + mu) * i_,
                gamma * i_ - mu * r_,
                -mu * n_,
                d * gamma * i_ - lam * d_,
                sigma * e_,
            ]
        )

    n0 = values["N0"]
    e0 = values["E0"]
    i0 = values["I0"]
    u0 = np.array([n0 - e0 - i0, e0, i0, 0.0, n0, 0.0, i0])
    return OdeSystem(name="seir", dim=len(SEIR_COMPARTMENTS), rhs=rhs, u0=u0, params=values, norm=norm)


def make_linear(
    lam: float | ArrayLike = -1.0,
    u0: ArrayLike | None = None,
    *,
    norm: NormKind = "max",
) -> OdeSystem:
    """Linear system u' = Lambda u; a scalar lam gives the one-dimensional test equation."""
    matrix = np.atleast_2d(np.asarray(lam, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        raise ConfigurationError("linear system matrix must be square", details={"shape": list(matrix.shape)})
    dim = matrix.shape[0]
    initial = np.ones(dim) if u0 is None else np.asarray(u0, dtype=float).reshape(-1)
    frozen = matrix.copy()
    frozen.setflags(write=False)

    def rhs(t: float, u: FloatArray) -> FloatArray:
        return frozen @ u

    def jacobian(t: float, u: FloatArray) -> FloatArray:
        return frozen.copy()

    params = {"lam": float(frozen[0, 0])} if dim == 1 else {f"lam_{i}{j}": float(frozen[i, j]) for i in range(dim) for j in range(dim)}
    return OdeSystem(name="linear", dim=dim, rhs=rhs, jacobian=jacobian, u0=initial, params=params, norm=norm)


def _build_brusselator(params: Mapping[str, Any], norm: NormKind) -> OdeSystem:
    values = _merge_params({"A": 1.0, "B": 3.0}, params, "brusselator")
    return make_brusselator(values["A"], values["B"], norm=norm)


def _build_van_der_pol(params: Mapping[str, Any], norm: NormKind) -> OdeSystem:
    values = _merge_params({"mu": 4.0}, params, "van_der_pol")
    return make_van_der_pol(values["mu"], norm=norm)


def _build_linear(params: Mapping[str, Any], norm: NormKind) -> OdeSystem:
    values = _merge_params({"lam": -1.0, "u0": 1.0}, params, "linear")
    return make_linear(values["lam"], [values["u0"]], norm=norm)


SYSTEM_BUILDERS: dict[str, Callable[[Mapping[str, Any], NormKind], OdeSystem]] = {
    "brusselator": _build_brusselator,
    "van_der_pol": _build_van_der_pol,
    "oregonator": lambda params, norm: make_oregonator(params, norm=norm),
    "seir": lambda params, norm: make_seir(params, norm=norm),
    "linear": _build_linear,
}


def make_system(name: str, params: Mapping[str, Any] | None = None, *, norm: NormKind = "max") -> OdeSystem:
    key = (name or "").strip().lower()
    builder = SYSTEM_BUILDERS.get(key)
    if builder is None:
        raise ConfigurationError(
            f"unknown problem: {name!r}",
            details={"problem": name, "allowed": sorted(SYSTEM_BUILDERS)},
        )
    return builder(params or {}, norm)
