import math
import random

import pytest

from adaptive_parareal.parareal import EXACT_ZETA, ToleranceSchedule, schedule_zeta


def test_theoretical_schedule_known_values():
    schedule = ToleranceSchedule(mode="theoretical", eps_g=0.1, eta=1e-8)
    assert schedule.zeta(0) == pytest.approx(0.01, rel=1e-12)
    assert schedule.zeta(1) == pytest.approx(5e-4, rel=1e-12)
    assert schedule.zeta(2) == pytest.approx(1e-4 / 6.0, rel=1e-12)


def test_theoretical_schedule_first_entry_is_exact():
    for eps_g in (0.5, 0.1, 0.03, 1e-3):
        for nu in (0.5, 1.0, 2.0):
            schedule = ToleranceSchedule(mode="theoretical", eps_g=eps_g, eta=1e-8, nu=(nu,))
            assert schedule.zeta(0) == eps_g**2 / nu


def test_practical_schedule_interpolates_to_half_eta():
    schedule = ToleranceSchedule(mode="practical", eps_g=0.1, eta=1e-8, K=4)
    assert schedule.zeta(3) == 5e-9
    assert schedule.zeta(10) == 5e-9
    assert schedule.zeta(0) == pytest.approx(0.1**0.75 * 5e-9**0.25, rel=1e-12)
    assert schedule.zeta(0) == pytest.approx(1.495e-3, rel=1e-3)


def test_practical_schedule_ends_at_half_eta_for_random_targets():
    rng = random.Random(11)
    for _ in range(20):
        eps_g = 10 ** rng.uniform(-3, -0.5)
        eta = 10 ** rng.uniform(-12, -4)
        K = rng.randint(1, 12)
        schedule = ToleranceSchedule(mode="practical", eps_g=eps_g, eta=eta, K=K)
        assert schedule.zeta(K - 1) == eta / 2.0


def test_fixed_and_exact_schedules():
    assert ToleranceSchedule(mode="fixed", eps_g=0.1, eta=1e-6).zeta(7) == 5e-7
    assert ToleranceSchedule(mode="exact", eps_g=0.1, eta=1e-6).zeta(0) == EXACT_ZETA


@pytest.mark.parametrize(
    "schedule",
    [
        ToleranceSchedule(mode="theoretical", eps_g=0.2, eta=1e-10),
        ToleranceSchedule(mode="practical", eps_g=0.2, eta=1e-10, K=6),
        ToleranceSchedule(mode="fixed", eps_g=0.2, eta=1e-10),
    ],
)
def test_schedules_are_nonincreasing(schedule):
    values = [schedule.zeta(k) for k in range(12)]
    assert all(b <= a for a, b in zip(values[:-1], values[1:]))


def test_theoretical_schedule_stays_positive_for_large_k():
    schedule = ToleranceSchedule(mode="theoretical", eps_g=0.5, eta=1e-8)
    for k in (149, 150, 400, 2000):
        value = schedule.zeta(k)
        assert value > 0
        assert math.isfinite(value)


def test_nu_update_extends_with_ones():
    schedule = ToleranceSchedule(mode="theoretical", eps_g=0.1, eta=1e-8).with_nu(2, 4.0)
    assert schedule.nu == (1.0, 1.0, 4.0)
    assert schedule.zeta(2) == pytest.approx(1e-4 / 24.0, rel=1e-12)


def test_schedule_validation():
    with pytest.raises(ValueError):
        ToleranceSchedule(mode="practical", eps_g=0.1, eta=1e-8)
    with pytest.raises(ValueError):
        ToleranceSchedule(mode="geometric", eps_g=0.1, eta=1e-8)  # type: ignore[arg-type]
    with pytest.raises(ValueError):
        ToleranceSchedule(mode="fixed", eps_g=0.0, eta=1e-8)
    with pytest.raises(ValueError):
        schedule_zeta(ToleranceSchedule(mode="fixed", eps_g=0.1, eta=1e-8), -1)
