import importlib.util
from pathlib import Path


def _load_benchmark_module():
    script_path = Path(__file__).resolve().parents[1] / "scripts" / "benchmark_propagators.py"
    spec = importlib.util.spec_from_file_location("benchmark_propagators", script_path)
    assert spec and spec.loader
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _results(module, avg_ms, p95_ms):
    return {name: {"avg_ms": avg_ms, "p95_ms": p95_ms, "tags": [], "runs": 3} for name in module.SCENARIOS}


def test_get_profile_thresholds_returns_expected_mapping():
    module = _load_benchmark_module()
    thresholds = module.get_profile_thresholds("ci")
    assert thresholds is not None
    assert set(thresholds.keys()) == set(module.SCENARIOS)
    assert thresholds["brusselator_rk54"]["avg_ms"] == 250.0
    assert thresholds["brusselator_rk54"]["p95_ms"] == 400.0
    assert module.get_profile_thresholds("none") is None


def test_evaluate_thresholds_flags_profile_and_global_violations():
    module = _load_benchmark_module()
    results = _results(module, 100.0, 150.0)
    results["brusselator_rk54"] = {"avg_ms": 300.0, "p95_ms": 420.0, "tags": [], "runs": 3}

    failures = module.evaluate_thresholds(results, profile="ci", avg_threshold=200.0, p95_threshold=None)
    assert any("brusselator_rk54: avg_ms" in failure and "profile[ci]" in failure for failure in failures)
    assert any("brusselator_rk54: p95_ms" in failure and "profile[ci]" in failure for failure in failures)
    assert any("brusselator_rk54: avg_ms" in failure and "global limit 200.00" in failure for failure in failures)
    assert not any(failure.startswith("oregonator_radau") for failure in failures)


def test_evaluate_thresholds_reports_missing_scenarios():
    module = _load_benchmark_module()
    results = _results(module, 10.0, 10.0)
    results.pop("van_der_pol_radau")
    failures = module.evaluate_thresholds(results, profile="release", avg_threshold=None, p95_threshold=None)
    assert failures == ["van_der_pol_radau: missing benchmark result for profile release"]


def test_evaluate_thresholds_handles_unknown_profile():
    module = _load_benchmark_module()
    failures = module.evaluate_thresholds(
        _results(module, 100.0, 120.0),
        profile="unknown",
        avg_threshold=None,
        p95_threshold=None,
    )
    assert failures == ["Unknown benchmark profile: unknown"]


def test_percentile_picks_nearest_rank():
    module = _load_benchmark_module()
    assert module.percentile([], 0.95) == 0.0
    assert module.percentile([3.0, 1.0, 2.0], 0.5) == 2.0
    assert module.percentile([float(v) for v in range(1, 21)], 0.95) == 19.0
