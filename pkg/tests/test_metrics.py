import numpy as np
import pytest

from wbopt.metrics import (
    AxisRange,
    CmdSample,
    SweepCurve,
    axis_range_sweep,
    ood_sweep,
    to_resolver,
    tracking_errors,
)


def cmd(rpy, h, v=None):
    return CmdSample(rpy=np.asarray(rpy, dtype=float), height=h,
                     velocity=None if v is None else np.asarray(v, dtype=float))


def test_perfect_tracking_zero_errors():
    pairs = [(cmd([0.1, 0.2, 0.3], 0.7), cmd([0.1, 0.2, 0.3], 0.7))] * 5
    e = tracking_errors(pairs)
    assert (e.e_yaw, e.e_pitch, e.e_roll, e.e_height) == (0, 0, 0, 0)
    assert e.e_velocity is None


def test_single_pair_yaw_offset():
    pairs = [(cmd([0, 0, 0.5], 0.7), cmd([0, 0, 0.4], 0.7))]
    e = tracking_errors(pairs)
    assert abs(e.e_yaw - 0.1) < 1e-15
    assert e.e_pitch == 0 and e.e_roll == 0 and e.e_height == 0


def test_tracking_matches_bruteforce(rng):
    pairs = []
    for _ in range(40):
        pairs.append((cmd(rng.normal(size=3), rng.uniform(0.5, 0.8), rng.normal(size=3)),
                      cmd(rng.normal(size=3), rng.uniform(0.5, 0.8), rng.normal(size=3))))
    e = tracking_errors(pairs)
    # one-line oracle: mean of |delta| per axis
    manual = np.array([[abs(c.rpy[0] - a.rpy[0]), abs(c.rpy[1] - a.rpy[1]),
                        abs(c.rpy[2] - a.rpy[2]), abs(c.height - a.height)]
                       for c, a in pairs])
    assert abs(e.e_roll - manual[:, 0].mean()) <= 1e-15
    assert abs(e.e_pitch - manual[:, 1].mean()) <= 1e-15
    assert abs(e.e_yaw - manual[:, 2].mean()) <= 1e-15
    assert abs(e.e_height - manual[:, 3].mean()) <= 1e-15
    vel = np.mean([np.mean(np.abs(c.velocity - a.velocity)) for c, a in pairs])
    assert abs(e.e_velocity - vel) <= 1e-15


def test_velocity_absent_not_zero_filled():
    pairs = [(cmd([0, 0, 0], 0.7), cmd([0, 0, 0.2], 0.7))]
    assert tracking_errors(pairs).e_velocity is None


def test_empty_pairs_rejected():
    with pytest.raises(ValueError):
        tracking_errors([])


def test_axis_range_perfect_resolver():
    r = axis_range_sweep(lambda c: c, "yaw", threshold=0.05, step=0.1, limit=2.0)
    assert r.min == -2.0 and r.max == 2.0


def test_axis_range_clamping_resolver():
    """A resolver that clamps at +/-0.52 (waist-only analog): the range ends
    where |achieved - commanded| exceeds the 0.05 threshold, at +/-0.57."""
    r = axis_range_sweep(lambda c: np.clip(c, -0.52, 0.52), "pitch",
                         threshold=0.05, step=0.01)
    assert abs(r.min - (-0.57)) < 1e-9
    assert abs(r.max - 0.57) < 1e-9


def test_axis_range_widening_threshold_never_shrinks():
    resolver = lambda c: np.clip(c, -0.3, 0.8)
    narrow = axis_range_sweep(resolver, "pitch", threshold=0.03, step=0.01)
    wide = axis_range_sweep(resolver, "pitch", threshold=0.10, step=0.01)
    assert wide.min <= narrow.min and wide.max >= narrow.max


def test_axis_range_start_failure():
    with pytest.raises(RuntimeError, match="start"):
        axis_range_sweep(lambda c: c + 1.0, "yaw", threshold=0.05)


def test_ood_sweep_identity_diagonal():
    curve = ood_sweep(lambda c: c, "yaw", id_range=(-1.57, 1.57),
                      ood_range=(-2.0, 2.0), step=0.05)
    assert np.allclose(curve.achieved, curve.commanded)
    assert curve.id_range == (-1.57, 1.57)
    doc = curve.to_dict()
    back = SweepCurve.from_dict(doc)
    assert np.array_equal(back.commanded, curve.commanded)


def test_ood_range_must_contain_id():
    with pytest.raises(ValueError):
        ood_sweep(lambda c: c, "yaw", id_range=(-2, 2), ood_range=(-1, 1))


def test_sweep_curve_validation():
    with pytest.raises(ValueError, match="increasing"):
        SweepCurve(axis="yaw", commanded=[0.0, 0.0], achieved=[0, 0],
                   id_range=(0, 1))
    with pytest.raises(ValueError, match="length"):
        SweepCurve(axis="yaw", commanded=[0.0, 1.0], achieved=[0.0],
                   id_range=(0, 1))


def test_to_resolver_tracks_pitch(humanoid):
    resolver = to_resolver(humanoid, "pitch")
    achieved = resolver(0.8)
    assert abs(achieved - 0.8) <= 0.05
