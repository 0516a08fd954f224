import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wbopt.curriculum import (
    CommandSet,
    CurriculumSchedule,
    gait_clock,
    gait_frequency,
    sample_command_set,
    schedule_snapshot,
    stance_rate,
)

steps = st.floats(0, 2e6, allow_nan=False)


def test_gait_frequency_table_constants():
    assert gait_frequency(0) == 1.3
    assert gait_frequency(4999) == 1.3
    assert gait_frequency(10000) == 1.0
    assert gait_frequency(1e6) == 1.0
    assert abs(gait_frequency(7500) - 1.15) < 1e-12


def test_stance_rate_table_constants():
    assert stance_rate(0) == 0.2
    assert stance_rate(999) == 0.2
    assert stance_rate(2000) == 0.5
    assert stance_rate(1e6) == 0.5
    assert abs(stance_rate(1500) - 0.35) < 1e-12


def test_ramps_continuous_at_breakpoints():
    for f, pts in ((gait_frequency, (5000, 10000)), (stance_rate, (1000, 2000))):
        for p in pts:
            assert abs(f(p) - f(p - 1e-9)) < 1e-8
            assert abs(f(p) - f(p + 1e-9)) < 1e-8


@given(s1=steps, s2=steps)
def test_monotonicity(s1, s2):
    lo, hi = min(s1, s2), max(s1, s2)
    assert gait_frequency(hi) <= gait_frequency(lo) + 1e-12
    assert stance_rate(hi) >= stance_rate(lo) - 1e-12


def test_gait_clock_values():
    assert np.allclose(gait_clock(0.0, 1.3), [0.0, 1.0], atol=1e-15)
    assert np.allclose(gait_clock(0.25, 1.0), [1.0, 0.0], atol=1e-12)


@given(t=st.floats(0, 100), f=st.floats(0.1, 5.0))
def test_gait_clock_unit_norm(t, f):
    assert abs(np.linalg.norm(gait_clock(t, f)) - 1.0) <= 1e-12


def test_activation_steps(humanoid):
    sched = CurriculumSchedule()
    assert (sched.begin_height, sched.begin_roll, sched.begin_pitch,
            sched.begin_yaw, sched.begin_arms) == (100, 2000, 2000, 2000, 4000)

    rng = np.random.default_rng(0)
    cs = sample_command_set(50, rng, sched, humanoid)
    assert cs.height == 0.8
    assert np.array_equal(cs.rpy, np.zeros(3))
    assert np.array_equal(cs.arms, np.zeros(14))

    cs = sample_command_set(3000, rng, sched, humanoid)
    r = sched.ranges
    assert r.roll[0] <= cs.rpy[0] <= r.roll[1]
    assert r.pitch[0] <= cs.rpy[1] <= r.pitch[1]
    assert r.yaw[0] <= cs.rpy[2] <= r.yaw[1]
    assert np.array_equal(cs.arms, np.zeros(14))  # arms still default


def test_activation_correctness_random_steps(humanoid):
    sched = CurriculumSchedule()
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = rng.integers(0, 12000)
        cs = sample_command_set(float(s), rng, sched, humanoid)
        if cs.height != sched.default_height:
            assert s >= sched.begin_height
        if np.any(cs.rpy != 0):
            assert s >= min(sched.begin_roll, sched.begin_pitch, sched.begin_yaw)
        if np.any(cs.arms != 0):
            assert s >= sched.begin_arms


def test_late_coverage_no_empty_decile(humanoid):
    sched = CurriculumSchedule()
    rng = np.random.default_rng(2)
    draws = [sample_command_set(1e6, rng, sched, humanoid) for _ in range(10_000)]
    r = sched.ranges
    for (lo, hi), vals in [
        (r.height, [c.height for c in draws]),
        (r.roll, [c.rpy[0] for c in draws]),
        (r.pitch, [c.rpy[1] for c in draws]),
        (r.yaw, [c.rpy[2] for c in draws]),
    ]:
        hist, _ = np.histogram(vals, bins=10, range=(lo, hi))
        assert np.all(hist > 0)


def test_snapshot_keys():
    snap = schedule_snapshot(7500)
    assert snap["gait_frequency"] == gait_frequency(7500)
    assert snap["stance_rate"] == stance_rate(7500)
    assert snap["arms_active"] is True


def test_invalid_schedule():
    with pytest.raises(ValueError):
        CurriculumSchedule(gait_freq_begin=10, gait_freq_final=5)
    with pytest.raises(ValueError):
        gait_clock(-1.0, 1.0)
