import filecmp
import json

import numpy as np
import pytest

from wbopt.dataset import (
    DatasetError,
    SamplingRanges,
    corner_commands,
    generate_dataset,
    load_motion_frames,
    read_dataset,
    sample_command,
    sample_upper,
    validate_dataset,
)


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    from wbopt.model import load_humanoid
    model = load_humanoid()
    path = str(tmp_path_factory.mktemp("ds") / "small.jsonl")
    report = generate_dataset(model, n=10, seed=3, out=path, workers=1)
    return model, path, report


def test_sampling_ranges_validation():
    with pytest.raises(ValueError):
        SamplingRanges(height=(0.9, 0.5))
    with pytest.raises(ValueError):
        SamplingRanges(upper_mode="nope")
    with pytest.raises(ValueError):
        SamplingRanges(upper_mode="motion_file")


def test_sample_command_statistics():
    ranges = SamplingRanges()
    rng = np.random.default_rng(0)
    n = 100_000
    draws = np.array([np.concatenate([c.rpy, [c.height]])
                      for c in (sample_command(rng, ranges) for _ in range(n))])
    bounds = [ranges.roll, ranges.pitch, ranges.yaw, ranges.height]
    for axis, (lo, hi) in enumerate(bounds):
        vals = draws[:, axis]
        assert vals.min() >= lo and vals.max() <= hi
        # mean within 3 sigma of the midpoint of a uniform distribution
        sigma = (hi - lo) / np.sqrt(12 * n)
        assert abs(vals.mean() - 0.5 * (lo + hi)) <= 3 * sigma


def test_sample_command_degenerate_range():
    ranges = SamplingRanges(height=(0.6, 0.6 + 1e-12))
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert abs(sample_command(rng, ranges).height - 0.6) < 1e-9


def test_sample_command_seed_determinism():
    ranges = SamplingRanges()
    a = [sample_command(np.random.default_rng(5), ranges) for _ in range(1)]
    draws1 = [np.concatenate([c.rpy, [c.height]])
              for c in (sample_command(np.random.default_rng(9), ranges) for _ in range(100))]
    draws2 = [np.concatenate([c.rpy, [c.height]])
              for c in (sample_command(np.random.default_rng(9), ranges) for _ in range(100))]
    assert np.array_equal(np.array(draws1), np.array(draws2))


def test_sample_upper_uniform_coverage(humanoid):
    rng = np.random.default_rng(1)
    ranges = SamplingRanges()
    draws = np.array([sample_upper(rng, humanoid, ranges) for _ in range(10_000)])
    idx = humanoid.upper_indices()
    lo, hi = humanoid.limits_lower[idx], humanoid.limits_upper[idx]
    assert np.all(draws >= lo) and np.all(draws <= hi)
    span = hi - lo
    covered = (draws.max(axis=0) - draws.min(axis=0)) / span
    assert np.all(covered >= 0.95)


def test_motion_file_single_frame(humanoid, tmp_path):
    frame = np.full(14, 0.1)
    path = tmp_path / "motion.csv"
    path.write_text(",".join(str(v) for v in frame) + "\n")
    ranges = SamplingRanges(upper_mode="motion_file", motion_file=str(path))
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert np.allclose(sample_upper(rng, humanoid, ranges), frame)


def test_motion_file_out_of_limit_frame(humanoid, tmp_path):
    path = tmp_path / "bad.csv"
    ok = ",".join(["0.0"] * 14)
    bad = ",".join(["99.0"] * 14)
    path.write_text(ok + "\n" + bad + "\n")
    with pytest.raises(DatasetError, match="frame 1"):
        load_motion_frames(str(path), humanoid)


def test_motion_file_empty(humanoid, tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(DatasetError, match="no frames"):
        load_motion_frames(str(path), humanoid)


def test_corner_commands_cover_all_bounds():
    ranges = SamplingRanges()
    corners = corner_commands(ranges)
    assert len(corners) == 8
    hs = sorted(c.height for c in corners)
    assert hs[0] == ranges.height[0] and hs[-1] == ranges.height[1]
    for axis, (lo, hi) in enumerate([ranges.roll, ranges.pitch, ranges.yaw]):
        vals = [c.rpy[axis] for c in corners]
        assert lo in vals and hi in vals


def test_generated_dataset_validates(small_dataset):
    model, path, report = small_dataset
    assert report.n == 10
    v = validate_dataset(path, model)
    assert v.ok, v.violations
    samples = read_dataset(path)
    assert [s.i for s in samples] == list(range(10))


def test_generation_determinism(small_dataset, tmp_path):
    model, path, _ = small_dataset
    out2 = str(tmp_path / "again.jsonl")
    generate_dataset(model, n=10, seed=3, out=out2, workers=2)
    assert filecmp.cmp(path, out2, shallow=False)


def test_validate_flags_tampered_sample(small_dataset, tmp_path):
    model, path, _ = small_dataset
    lines = open(path).read().splitlines()
    doc = json.loads(lines[4])
    doc["q_ref_lower"][0] = 99.0  # far out of any joint limit
    lines[4] = json.dumps(doc)
    bad = tmp_path / "tampered.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    v = validate_dataset(str(bad), model)
    assert not v.ok
    assert any("joint limits" in msg for msg in v.violations)


def test_read_rejects_malformed_line(small_dataset, tmp_path):
    model, path, _ = small_dataset
    lines = open(path).read().splitlines()
    lines[2] = "{broken json"
    bad = tmp_path / "malformed.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="line 3"):
        read_dataset(str(bad))


def test_read_rejects_missing_key(small_dataset, tmp_path):
    model, path, _ = small_dataset
    lines = open(path).read().splitlines()
    doc = json.loads(lines[0])
    del doc["q_ref_lower"]
    lines[0] = json.dumps(doc)
    bad = tmp_path / "missing.jsonl"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="q_ref_lower"):
        read_dataset(str(bad))
