from __future__ import annotations

import os

from pydantic_settings import BaseSettings, SettingsConfigDict


class Config(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    APP_ENV: str = "development"
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = True

    MAX_WORKERS: int = 0
    REFERENCE_TOL: float = 1e-13
    CHART_CHECKPOINTS: int = 10
    METRICS_EXPORT_PATH: str = ""

    @property
    def app_env(self) -> str:
        value = (self.APP_ENV or "").strip().lower()
        return value or "development"

    def worker_count(self, n_intervals: int) -> int:
        cores = os.cpu_count() or 1
        limit = self.MAX_WORKERS if self.MAX_WORKERS > 0 else cores
        return max(1, min(int(n_intervals), limit))

    @property
    def metrics_export_path(self) -> str | None:
        value = (self.METRICS_EXPORT_PATH or "").strip()
        return value or None
