"""Command-line entry point: ``calibrate``, ``run``, ``sweep`` and ``bounds``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from adaptive_parareal.bootstrap import validate_run_config, validate_settings
from adaptive_parareal.config import Config
from adaptive_parareal.errors import EXIT_OK, DivergenceError, PararealError, build_error_payload, exit_code_for
from adaptive_parareal.logging_config import configure_logging
from adaptive_parareal.observability import export_metrics
from adaptive_parareal.repositories.report_repository import ReportRepository
from adaptive_parareal.schemas import RunConfig, load_run_config
from adaptive_parareal.services import build_calibration_service, build_experiment_service
from adaptive_parareal.version import APP_VERSION

COMMANDS = ("calibrate", "run", "sweep", "bounds")

logger = logging.getLogger("adaptive_parareal.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive-parareal",
        description="Adaptive and classical parareal experiments on stiff ODE benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("calibrate", "Build tolerance-to-accuracy charts for the configured solvers."),
        ("run", "Run classical and/or adaptive parareal and write the convergence history."),
        ("sweep", "Sweep interval counts and targets, writing the speedup table."),
        ("bounds", "Compare observed errors with the convergence bounds."),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="TOML run configuration.")
        sub.add_argument("--out", default=None, help="Output directory (overrides output.directory).")
        sub.add_argument("--serial", action="store_true", help="Run every propagation on the calling thread.")
        sub.add_argument("--metrics", default=None, help="Write Prometheus metrics to this file on exit.")
        if name == "run":
            sub.add_argument(
                "--algorithm",
                choices=["classical", "adaptive", "both"],
                default="both",
                help="Which parareal variant(s) to run.",
            )
    return parser


def _with_output(run_config: RunConfig, out: str | None) -> RunConfig:
    if not out:
        return run_config
    output = run_config.output.model_copy(update={"directory": str(Path(out).resolve())})
    return run_config.model_copy(update={"output": output})


def _print_json(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2, default=str))


def _execute(args: argparse.Namespace, settings: Config) -> int:
    run_config = _with_output(load_run_config(args.config), args.out)
    validate_run_config(run_config, args.command)

    calibration = build_calibration_service(settings=settings)
    if args.command == "calibrate":
        workers = 1 if args.serial else settings.worker_count(len(run_config.calibration.fine_tolerances))
        charts = calibration.charts_for(run_config, max_workers=workers, persist=True)
        _print_json(
            {
                "command": "calibrate",
                "charts": {
                    role: {"path": str(item.path), "samples": len(item.chart.tols), "method": item.chart.method}
                    for role, item in charts.items()
                },
            }
        )
        return EXIT_OK

    reports = ReportRepository(
        run_config.resolve_path(run_config.output.directory),
        prefix=run_config.output.prefix,
        config_path=run_config.source_path,
        environment=settings.app_env,
    )
    experiments = build_experiment_service(settings=settings, calibration=calibration, reports=reports)
    try:
        if args.command == "run":
            outcome: Any = experiments.run(run_config, args.algorithm, serial=args.serial)
            statuses = {name: run.status for name, run in outcome.runs.items()}
        elif args.command == "sweep":
            outcome = experiments.sweep(run_config, serial=args.serial)
            statuses = {f"{row['algorithm']}/{row['eta']:g}": row["status"] for row in outcome.rows}
        else:
            outcome = experiments.bounds(run_config, serial=args.serial)
            statuses = {"adaptive": outcome.run.status}

        _print_json({"command": args.command, "files": [str(path) for path in outcome.files], "status": statuses})
        if not outcome.ok:
            raise DivergenceError("one or more runs did not converge", details=statuses)
    except PararealError as exc:
        reports.write_error(code=exc.code, message=exc.message, details=exc.details)
        raise
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = Config()
    configure_logging(level=settings.LOG_LEVEL, json_logs=settings.LOG_JSON)

    try:
        validate_settings(settings)
        return _execute(args, settings)
    except PararealError as exc:
        logger.error("command_failed", extra={"status": exc.code, "detail": exc.message})
        print(json.dumps(exc.to_payload(), ensure_ascii=False, default=str), file=sys.stderr)
        return exit_code_for(exc)
    except Exception as exc:  # pragma: no cover - last-resort guard for the process exit code
        logger.exception("command_crashed")
        payload = build_error_payload(code="INTERNAL_ERROR", message=str(exc))
        print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
        return exit_code_for(exc)
    finally:
        metrics_path = args.metrics or settings.metrics_export_path
        if metrics_path:
            export_metrics(metrics_path)


if __name__ == "__main__":
    raise SystemExit(main())
