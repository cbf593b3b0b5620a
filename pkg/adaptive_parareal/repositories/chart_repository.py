from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from adaptive_parareal.calibration import AccuracyChart
from adaptive_parareal.errors import ConfigurationError
from adaptive_parareal.version import APP_VERSION

CHART_FORMAT_VERSION = 1


class ChartSample(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tol: float = Field(gt=0)
    eps: float = Field(gt=0)
    raw_eps: float = Field(gt=0)


class ChartFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = CHART_FORMAT_VERSION
    generator_version: str = APP_VERSION
    system_id: str
    method: str
    T: float = Field(gt=0)
    checkpoints: int = Field(ge=0)
    solver: dict[str, Any] = Field(default_factory=dict)
    samples: list[ChartSample] = Field(min_length=2)

    @classmethod
    def from_chart(cls, chart: AccuracyChart) -> "ChartFile":
        raw = chart.raw_eps or chart.eps
        return cls(
            system_id=chart.system_id,
            method=chart.method,
            T=chart.T,
            checkpoints=chart.checkpoints,
            solver=dict(chart.solver),
            samples=[
                ChartSample(tol=tol, eps=eps, raw_eps=raw_value)
                for tol, eps, raw_value in zip(chart.tols, chart.eps, raw)
            ],
        )

    def to_chart(self) -> AccuracyChart:
        samples = sorted(self.samples, key=lambda sample: sample.tol)
        return AccuracyChart(
            tols=tuple(sample.tol for sample in samples),
            eps=tuple(sample.eps for sample in samples),
            raw_eps=tuple(sample.raw_eps for sample in samples),
            system_id=self.system_id,
            method=self.method,
            T=self.T,
            checkpoints=self.checkpoints,
            solver=dict(self.solver),
        )


class ChartRepository:
    """Charts as sorted, timestamp-free JSON so reruns produce identical bytes."""

    def save(self, chart: AccuracyChart, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = ChartFile.from_chart(chart).model_dump(mode="json")
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def load(self, path: Path) -> AccuracyChart:
        if not path.is_file():
            raise ConfigurationError("chart file not found", details={"path": str(path)})
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return ChartFile.model_validate(data).to_chart()
        except (json.JSONDecodeError, ValidationError) as exc:
            raise ConfigurationError("chart file is invalid", details={"path": str(path), "error": str(exc)}) from exc
