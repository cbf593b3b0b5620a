from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from adaptive_parareal.analysis import CostModel
from adaptive_parareal.errors import ConfigurationError
from adaptive_parareal.integrators import SolverConfig
from adaptive_parareal.parareal import ScheduleMode
from adaptive_parareal.problems import NormKind

Algorithm = Literal["classical", "adaptive", "both"]


class StrictSection(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(StrictSection):
    name: str
    T: float = Field(gt=0)
    params: dict[str, Any] = Field(default_factory=dict)
    norm: NormKind = "max"

    @field_validator("name")
    @classmethod
    def _strip_name(cls, value: str) -> str:
        stripped = value.strip().lower()
        if not stripped:
            raise ValueError("problem name must not be empty")
        return stripped


class PartitionSection(StrictSection):
    n_intervals: Optional[int] = Field(default=None, gt=0)
    sweep: list[int] = Field(default_factory=list)
    balance: bool = True

    @field_validator("sweep")
    @classmethod
    def _positive_counts(cls, value: list[int]) -> list[int]:
        if any(item <= 0 for item in value):
            raise ValueError("sweep interval counts must be positive")
        return value

    @property
    def counts(self) -> list[int]:
        if self.sweep:
            return list(self.sweep)
        return [self.n_intervals] if self.n_intervals is not None else []


class ScheduleSection(StrictSection):
    mode: ScheduleMode = "practical"
    eta: Optional[float] = Field(default=None, gt=0)
    eta_sweep: list[float] = Field(default_factory=list)
    eps_g: float = Field(gt=0, lt=1)
    K: Optional[int] = Field(default=None, gt=0)
    k_max: Optional[int] = Field(default=None, gt=0)
    update_nu: bool = False
    accuracy_units: Literal["global", "normalized"] = "global"

    @field_validator("eta_sweep")
    @classmethod
    def _positive_etas(cls, value: list[float]) -> list[float]:
        if any(not item > 0 for item in value):
            raise ValueError("eta_sweep values must be positive")
        return value

    @property
    def etas(self) -> list[float]:
        if self.eta_sweep:
            return list(self.eta_sweep)
        return [self.eta] if self.eta is not None else []


class SolversSection(StrictSection):
    coarse: SolverConfig = Field(default_factory=lambda: SolverConfig(method="explicit_rk54"))
    fine: SolverConfig = Field(default_factory=lambda: SolverConfig(method="radau_iia5"))


class CalibrationSection(StrictSection):
    coarse_chart: Optional[str] = None
    fine_chart: Optional[str] = None
    coarse_tolerances: list[float] = Field(
        default_factory=lambda: [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6]
    )
    fine_tolerances: list[float] = Field(
        default_factory=lambda: [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12]
    )
    checkpoints: Optional[int] = Field(default=None, gt=0)

    @field_validator("coarse_tolerances", "fine_tolerances")
    @classmethod
    def _positive_tolerances(cls, value: list[float]) -> list[float]:
        if any(not item > 0 for item in value):
            raise ValueError("tolerances must be positive")
        return value


class OutputSection(StrictSection):
    directory: str = "reports"
    prefix: str = ""


class BoundsSection(StrictSection):
    n_samples: int = Field(default=20, ge=10)
    inflation: float = Field(default=2.0, ge=1.0)
    spread: float = Field(default=0.05, gt=0)


class RunConfig(StrictSection):
    problem: ProblemSection
    partition: PartitionSection = Field(default_factory=PartitionSection)
    schedule: ScheduleSection
    solvers: SolversSection = Field(default_factory=SolversSection)
    calibration: CalibrationSection = Field(default_factory=CalibrationSection)
    cost_model: CostModel = Field(default_factory=CostModel)
    output: OutputSection = Field(default_factory=OutputSection)
    bounds: BoundsSection = Field(default_factory=BoundsSection)
    seed: int = 0
    source_path: Optional[str] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def _check_schedule(self) -> "RunConfig":
        if self.schedule.K is not None and self.schedule.k_max is not None and self.schedule.K > self.schedule.k_max:
            raise ValueError("schedule.K must not exceed schedule.k_max")
        return self

    def base_dir(self) -> Path:
        return Path(self.source_path).resolve().parent if self.source_path else Path.cwd()

    def resolve_path(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir() / path


def _validation_details(exc: ValidationError) -> list[dict[str, Any]]:
    return [
        {"loc": [str(part) for part in error.get("loc", ())], "msg": error.get("msg", "")}
        for error in exc.errors()
    ]


def parse_run_config(data: dict[str, Any], *, source_path: str | None = None) -> RunConfig:
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError("invalid run configuration", details=_validation_details(exc)) from exc
    return config.model_copy(update={"source_path": source_path})


def load_run_config(path: str | Path) -> RunConfig:
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigurationError("configuration file not found", details={"path": str(file_path)})
    try:
        with file_path.open("rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError("configuration file is not valid TOML", details={"path": str(file_path), "error": str(exc)}) from exc
    return parse_run_config(data, source_path=str(file_path))
