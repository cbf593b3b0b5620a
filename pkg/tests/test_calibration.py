import logging

import numpy as np
import pytest

from adaptive_parareal import calibration
from adaptive_parareal.calibration import (
    AccuracyChart,
    build_chart,
    chart_grid,
    measure_accuracy,
    regularize,
    tol_for_accuracy,
)
from adaptive_parareal.errors import CalibrationError, ConfigurationError
from adaptive_parareal.integrators import SolverConfig, reference_solve
from adaptive_parareal.problems import make_brusselator, make_linear
from conftest import build_synthetic_chart

DECAY_TOLERANCES = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]


def _decay_reference(system, T=2.0, checkpoints=4):
    return reference_solve(system, T, chart_grid(T, checkpoints))


def test_chart_accuracy_decreases_with_tolerance(decay_system):
    chart = build_chart(decay_system, "explicit_rk54", 2.0, DECAY_TOLERANCES, _decay_reference(decay_system))
    assert chart.tols == tuple(sorted(DECAY_TOLERANCES))
    assert all(b >= a for a, b in zip(chart.eps[:-1], chart.eps[1:]))
    assert chart.eps[0] < chart.eps[-1]
    assert chart.checkpoints == 4
    assert chart.system_id == decay_system.fingerprint
    assert "atol" not in chart.solver


def test_chart_collapses_duplicate_tolerances(decay_system, caplog):
    with caplog.at_level(logging.WARNING, logger="adaptive_parareal.calibration"):
        chart = build_chart(
            decay_system,
            "explicit_rk54",
            2.0,
            [1e-3, 1e-4, 1e-4, 1e-5, 1e-6],
            _decay_reference(decay_system),
        )
    assert len(chart.tols) == 4
    assert "chart_duplicate_tolerances" in [record.getMessage() for record in caplog.records]


def test_chart_requires_four_distinct_tolerances(decay_system):
    with pytest.raises(ConfigurationError):
        build_chart(decay_system, "explicit_rk54", 2.0, [1e-3, 1e-4, 1e-4, 1e-5], _decay_reference(decay_system))
    with pytest.raises(ConfigurationError):
        build_chart(decay_system, "explicit_rk54", 2.0, [1e-3, -1e-4, 1e-5, 1e-6], _decay_reference(decay_system))


def test_chart_fails_when_too_many_samples_fail(decay_system, monkeypatch):
    calls = {"count": 0}

    def _flaky(system, cfg, T, reference):
        calls["count"] += 1
        return None if cfg.tolerance < 1e-4 else 1e-3

    monkeypatch.setattr(calibration, "measure_accuracy", _flaky)
    with pytest.raises(CalibrationError) as exc_info:
        build_chart(decay_system, "explicit_rk54", 2.0, DECAY_TOLERANCES, _decay_reference(decay_system))
    assert calls["count"] == len(DECAY_TOLERANCES)
    assert exc_info.value.details["succeeded"] == 2


def test_chart_parallel_sampling_matches_serial(decay_system):
    reference = _decay_reference(decay_system)
    serial = build_chart(decay_system, "explicit_rk54", 2.0, DECAY_TOLERANCES, reference)
    parallel = build_chart(decay_system, "explicit_rk54", 2.0, DECAY_TOLERANCES, reference, max_workers=3)
    assert serial.eps == parallel.eps
    assert serial.raw_eps == parallel.raw_eps


def test_measure_accuracy_reports_failed_runs():
    system = make_linear(-1e4)
    reference = reference_solve(system, 1.0, chart_grid(1.0, 2))
    cfg = SolverConfig(method="explicit_rk54", h_min=0.5, h_max=0.5).with_tolerance(1e-10)
    assert measure_accuracy(system, cfg, 1.0, reference) is None


def test_query_inverts_sample_points():
    chart = build_synthetic_chart()
    assert chart.query(1e-5).tol == pytest.approx(1e-6, rel=1e-10)
    assert chart.query(1e-5).clamped is None
    assert chart.eps_for_tol(1e-4) == pytest.approx(1e-3, rel=1e-10)


def test_query_is_monotone_between_samples():
    chart = build_synthetic_chart()
    zetas = np.geomspace(1e-7, 1e-1, 40)
    tols = [chart.query(float(zeta)).tol for zeta in zetas]
    assert all(b >= a for a, b in zip(tols[:-1], tols[1:]))


def test_query_clamps_outside_the_chart(caplog):
    chart = build_synthetic_chart()
    assert chart.query(1.0).tol == 1e-2
    assert chart.query(1.0).clamped == "above"
    with caplog.at_level(logging.WARNING, logger="adaptive_parareal.calibration"):
        assert tol_for_accuracy(chart, 1e-12) == 1e-8
    assert "chart_query_clamped" in [record.getMessage() for record in caplog.records]
    with pytest.raises(ValueError):
        chart.query(0.0)


def test_tied_accuracies_query_the_loosest_tolerance():
    chart = AccuracyChart(
        tols=(1e-8, 1e-6, 1e-4, 1e-2),
        eps=(1e-7, 1e-5, 1e-5, 1e-1),
        system_id="linear(lam=-1.0)",
        method="explicit_rk54",
        T=2.0,
    )
    assert chart.query(1e-5).tol == pytest.approx(1e-4, rel=1e-10)


def test_chart_rejects_inconsistent_samples():
    with pytest.raises(ConfigurationError):
        AccuracyChart(tols=(1e-6, 1e-8), eps=(1e-5, 1e-7), system_id="x", method="explicit_rk54", T=1.0)
    with pytest.raises(ConfigurationError):
        AccuracyChart(tols=(1e-8, 1e-6), eps=(1e-5, 1e-7), system_id="x", method="explicit_rk54", T=1.0)
    with pytest.raises(ConfigurationError):
        AccuracyChart(tols=(1e-8,), eps=(1e-7,), system_id="x", method="explicit_rk54", T=1.0)


def test_check_compatible_flags_mismatches(decay_system):
    chart = build_synthetic_chart()
    chart.check_compatible(decay_system, 2.0, "explicit_rk54")
    with pytest.raises(ConfigurationError) as exc_info:
        chart.check_compatible(make_brusselator(), 3.0, "radau_iia5")
    assert set(exc_info.value.details) == {"system", "T", "method"}


def test_regularize_produces_nondecreasing_accuracies():
    fitted = regularize([1e-6, 5e-7, 2e-5, 1e-5, 1e-3])
    assert all(b >= a for a, b in zip(fitted[:-1], fitted[1:]))
    assert fitted[-1] == pytest.approx(1e-3)


def test_chart_grid_spacing():
    np.testing.assert_allclose(chart_grid(2.0, 4), [0.0, 0.5, 1.0, 1.5, 2.0])
    with pytest.raises(ConfigurationError):
        chart_grid(2.0, 0)
