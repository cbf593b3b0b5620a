from __future__ import annotations

from pathlib import Path
from typing import Any, Protocol

from adaptive_parareal.calibration import AccuracyChart
from adaptive_parareal.ports.dto import BoundsRowDTO, HistoryRowDTO, SpeedupRowDTO


class ChartRepositoryPort(Protocol):
    def save(self, chart: AccuracyChart, path: Path) -> Path:
        ...

    def load(self, path: Path) -> AccuracyChart:
        ...


class ReportRepositoryPort(Protocol):
    def write_history(self, rows: list[HistoryRowDTO], name: str) -> Path:
        ...

    def write_speedups(self, rows: list[SpeedupRowDTO], name: str) -> Path:
        ...

    def write_bounds(self, rows: list[BoundsRowDTO], name: str) -> Path:
        ...

    def write_summary(self, summary: dict[str, Any], name: str) -> Path:
        ...
