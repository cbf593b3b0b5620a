#!/usr/bin/env python3
"""Propagator latency and cost benchmark for regression checks."""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Any, Callable

PROJECT_ROOT = Path(__file__).resolve().parents[1]

SCENARIO_TAGS: dict[str, list[str]] = {
    "brusselator_rk54": ["problem:brusselator", "method:explicit_rk54"],
    "brusselator_radau": ["problem:brusselator", "method:radau_iia5"],
    "van_der_pol_radau": ["problem:van_der_pol", "method:radau_iia5"],
    "oregonator_radau": ["problem:oregonator", "method:radau_iia5"],
}

# (problem, method, horizon, tolerance)
SCENARIOS: dict[str, tuple[str, str, float, float]] = {
    "brusselator_rk54": ("brusselator", "explicit_rk54", 20.0, 1e-8),
    "brusselator_radau": ("brusselator", "radau_iia5", 20.0, 1e-8),
    "van_der_pol_radau": ("van_der_pol", "radau_iia5", 20.0, 1e-8),
    "oregonator_radau": ("oregonator", "radau_iia5", 10.0, 1e-6),
}

BENCHMARK_PROFILES: dict[str, dict[str, dict[str, float]]] = {
    "dev": {
        "brusselator_rk54": {"avg_ms": 400.0, "p95_ms": 600.0},
        "brusselator_radau": {"avg_ms": 900.0, "p95_ms": 1300.0},
        "van_der_pol_radau": {"avg_ms": 1200.0, "p95_ms": 1800.0},
        "oregonator_radau": {"avg_ms": 1500.0, "p95_ms": 2200.0},
    },
    "ci": {
        "brusselator_rk54": {"avg_ms": 250.0, "p95_ms": 400.0},
        "brusselator_radau": {"avg_ms": 600.0, "p95_ms": 900.0},
        "van_der_pol_radau": {"avg_ms": 800.0, "p95_ms": 1200.0},
        "oregonator_radau": {"avg_ms": 1000.0, "p95_ms": 1500.0},
    },
    "release": {
        "brusselator_rk54": {"avg_ms": 150.0, "p95_ms": 250.0},
        "brusselator_radau": {"avg_ms": 400.0, "p95_ms": 600.0},
        "van_der_pol_radau": {"avg_ms": 500.0, "p95_ms": 800.0},
        "oregonator_radau": {"avg_ms": 700.0, "p95_ms": 1000.0},
    },
}


def percentile(values: list[float], p: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    k = max(0, min(len(ordered) - 1, int(round((len(ordered) - 1) * p))))
    return float(ordered[k])


def _load_package_dependencies() -> dict[str, Any]:
    if str(PROJECT_ROOT) not in sys.path:
        sys.path.insert(0, str(PROJECT_ROOT))

    from adaptive_parareal.integrators import SolverConfig, propagate
    from adaptive_parareal.problems import make_system

    return {"SolverConfig": SolverConfig, "propagate": propagate, "make_system": make_system}


def _measure(name: str, fn: Callable[[], Any], runs: int = 5) -> dict[str, float | list[str] | int]:
    durations = []
    last: Any = None
    for _ in range(runs):
        started = time.perf_counter()
        last = fn()
        durations.append((time.perf_counter() - started) * 1000.0)

    stats: dict[str, float | list[str] | int] = {
        "name": name,
        "runs": int(runs),
        "tags": list(SCENARIO_TAGS.get(name, [])),
        "avg_ms": round(statistics.fmean(durations), 2),
        "p95_ms": round(percentile(durations, 0.95), 2),
        "min_ms": round(min(durations), 2),
        "max_ms": round(max(durations), 2),
    }
    if last is not None:
        stats["accepted_steps"] = int(last.cost.accepted_steps)
        stats["rhs_evals"] = int(last.cost.rhs_evals)
    return stats


def _parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Benchmark regression checks for the propagators.")
    parser.add_argument(
        "--profile",
        choices=["none", "dev", "ci", "release"],
        default=(os.getenv("BENCH_PROFILE", "none").strip().lower() or "none"),
        help="Threshold profile to enforce.",
    )
    parser.add_argument(
        "--runs",
        type=int,
        default=max(1, int(os.getenv("BENCH_RUNS", "5"))),
        help="Per-scenario benchmark runs.",
    )
    return parser.parse_args()


def get_profile_thresholds(profile: str) -> dict[str, dict[str, float]] | None:
    normalized = (profile or "").strip().lower()
    if normalized in {"", "none"}:
        return None
    return BENCHMARK_PROFILES.get(normalized)


def evaluate_thresholds(
    results: dict[str, dict[str, float | list[str] | int]],
    *,
    profile: str,
    avg_threshold: float | None,
    p95_threshold: float | None,
) -> list[str]:
    failures: list[str] = []
    profile_thresholds = get_profile_thresholds(profile)

    if profile_thresholds is not None:
        for scenario_name, limits in profile_thresholds.items():
            stats = results.get(scenario_name)
            if stats is None:
                failures.append(f"{scenario_name}: missing benchmark result for profile {profile}")
                continue
            for metric in ("avg_ms", "p95_ms"):
                observed = float(stats[metric])  # type: ignore[arg-type]
                limit = float(limits[metric])
                if observed > limit:
                    failures.append(
                        f"{scenario_name}: {metric} {observed:.2f} exceeded profile[{profile}] limit {limit:.2f}"
                    )
    elif profile not in {"", "none"}:
        failures.append(f"Unknown benchmark profile: {profile}")

    for metric, threshold in (("avg_ms", avg_threshold), ("p95_ms", p95_threshold)):
        if threshold is None:
            continue
        for scenario_name, stats in results.items():
            observed = float(stats[metric])  # type: ignore[arg-type]
            if observed > threshold:
                failures.append(f"{scenario_name}: {metric} {observed:.2f} exceeded global limit {threshold:.2f}")

    return failures


def _collect_results(dependencies: dict[str, Any], *, runs: int) -> dict[str, dict[str, float | list[str] | int]]:
    make_system = dependencies["make_system"]
    solver_config = dependencies["SolverConfig"]
    propagate = dependencies["propagate"]
    results: dict[str, dict[str, float | list[str] | int]] = {}
    for name, (problem, method, horizon, tol) in SCENARIOS.items():
        system = make_system(problem)
        cfg = solver_config(method=method).with_tolerance(tol)
        results[name] = _measure(
            name,
            lambda system=system, cfg=cfg, horizon=horizon: propagate(system, 0.0, horizon, system.u0, cfg),
            runs=runs,
        )
    return results


def main() -> int:
    args = _parse_args()
    dependencies = _load_package_dependencies()
    results = _collect_results(dependencies, runs=max(1, int(args.runs)))

    avg_threshold = None
    p95_threshold = None
    avg_threshold_raw = os.getenv("BENCH_FAIL_THRESHOLD_MS")
    p95_threshold_raw = os.getenv("BENCH_FAIL_P95_THRESHOLD_MS")
    if avg_threshold_raw:
        avg_threshold = float(avg_threshold_raw)
    if p95_threshold_raw:
        p95_threshold = float(p95_threshold_raw)

    output: dict[str, Any] = dict(results)
    output["_meta"] = {
        "profile": args.profile,
        "profile_thresholds": get_profile_thresholds(args.profile),
        "global_thresholds": {"avg_ms": avg_threshold, "p95_ms": p95_threshold},
    }
    print(json.dumps(output, ensure_ascii=False, indent=2))

    failures = evaluate_thresholds(
        results,
        profile=args.profile,
        avg_threshold=avg_threshold,
        p95_threshold=p95_threshold,
    )
    if failures:
        print("Benchmark regression check failed.", file=sys.stderr)
        for failure in failures:
            print(f" - {failure}", file=sys.stderr)
        return 1

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
