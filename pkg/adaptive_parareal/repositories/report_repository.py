from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import pandas as pd

from adaptive_parareal.errors import build_error_payload
from adaptive_parareal.ports.dto import BoundsRowDTO, HistoryRowDTO, SpeedupRowDTO
from adaptive_parareal.version import APP_VERSION

FLOAT_FORMAT = "%.6e"

HISTORY_COLUMNS = ["k", "max_error", "increment", "zeta_k", "fine_tol", "fine_cost", "fine_cost_total", "coarse_cost"]
SPEEDUP_COLUMNS = [
    "T",
    "n_intervals",
    "eta",
    "algorithm",
    "status",
    "converged_at",
    "speedup_with_G",
    "speedup_without_G",
    "efficiency_with_G",
    "efficiency_without_G",
]
BOUNDS_COLUMNS = ["k", "observed_error", "ideal_bound", "perturbed_bound", "resolved"]


def _json_default(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, datetime):
        return value.isoformat()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class ReportRepository:
    def __init__(
        self,
        directory: Path,
        *,
        prefix: str = "",
        config_path: str | None = None,
        environment: str | None = None,
    ) -> None:
        self._directory = directory
        self._prefix = prefix
        self._config_path = config_path
        self._environment = environment

    @property
    def directory(self) -> Path:
        return self._directory

    def _path(self, name: str, suffix: str) -> Path:
        self._directory.mkdir(parents=True, exist_ok=True)
        return self._directory / f"{self._prefix}{name}{suffix}"

    def _write_table(self, rows: Sequence[Mapping[str, Any]], columns: list[str], name: str) -> Path:
        path = self._path(name, ".csv")
        frame = pd.DataFrame(list(rows), columns=columns)
        # nullable integers keep integer columns free of the float format
        for column in ("k", "n_intervals", "converged_at"):
            if column in frame.columns:
                frame[column] = frame[column].astype("Int64")
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return path

    def write_history(self, rows: list[HistoryRowDTO], name: str) -> Path:
        return self._write_table(rows, HISTORY_COLUMNS, name)

    def write_speedups(self, rows: list[SpeedupRowDTO], name: str) -> Path:
        return self._write_table(rows, SPEEDUP_COLUMNS, name)

    def write_bounds(self, rows: list[BoundsRowDTO], name: str) -> Path:
        return self._write_table(rows, BOUNDS_COLUMNS, name)

    def write_summary(self, summary: dict[str, Any], name: str) -> Path:
        path = self._path(name, ".json")
        document = {
            "provenance": {
                "generated_at": datetime.now(timezone.utc).isoformat(),
                "version": APP_VERSION,
                "config_path": self._config_path,
                "environment": self._environment,
            },
            **summary,
        }
        path.write_text(
            json.dumps(document, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n",
            encoding="utf-8",
        )
        return path

    def write_error(self, *, code: str, message: str, details: Any, name: str = "error") -> Path:
        return self.write_summary({"error": build_error_payload(code=code, message=message, details=details)}, name)
