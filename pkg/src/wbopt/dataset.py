"""Supervision-dataset generation for the command-adaptation network.

Samples (upper-body pose, torso command) pairs, solves each with the
trajectory optimizer and persists accepted reference poses as JSONL, one
record per line:

    {"i": int, "q_upper": [14], "rpy": [3], "h": float, "q_ref_lower": [15],
     "stats": {"iters": int, "cost": float, "res_rpy": float, "res_h": float},
     "seed": int}

Generation is embarrassingly parallel: sample i derives its rng from
(seed, i, attempt), so output is order-independent, reproducible and
byte-identical across worker counts. Rejected solves are resampled with a
fresh derived seed, keeping n exact; rejected samples never reach the file.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import sys
from dataclasses import dataclass, field

import numpy as np

from .model import RobotModel, load_humanoid
from .wbc import CostWeights, WbcCommand, WbcConfig, achieved_torso, solve_reference

MAX_ATTEMPTS_PER_SAMPLE = 20
N_CORNERS = 8


class GenerationError(RuntimeError):
    pass


class DatasetError(ValueError):
    """Schema or invariant violation; the message carries the line number."""


@dataclass
class SamplingRanges:
    """Per-axis command ranges; the defaults are the published curriculum
    sampling bounds (height 0.5-0.8, roll +/-0.7, pitch -0.52-1.57,
    yaw +/-1.57)."""

    height: tuple[float, float] = (0.5, 0.8)
    roll: tuple[float, float] = (-0.7, 0.7)
    pitch: tuple[float, float] = (-0.52, 1.57)
    yaw: tuple[float, float] = (-1.57, 1.57)
    upper_mode: str = "uniform"  # or "motion_file"
    motion_file: str | None = None

    def __post_init__(self):
        for name in ("height", "roll", "pitch", "yaw"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"range '{name}': lower must be < upper")
        if self.upper_mode not in ("uniform", "motion_file"):
            raise ValueError(f"unknown upper_mode '{self.upper_mode}'")
        if self.upper_mode == "motion_file" and not self.motion_file:
            raise ValueError("motion_file mode requires a file path")

    @staticmethod
    def from_json(text: str) -> "SamplingRanges":
        raw = json.loads(text)
        kwargs = {}
        for name in ("height", "roll", "pitch", "yaw"):
            if name in raw:
                kwargs[name] = (float(raw[name][0]), float(raw[name][1]))
        for name in ("upper_mode", "motion_file"):
            if name in raw:
                kwargs[name] = raw[name]
        return SamplingRanges(**kwargs)


@dataclass
class ReferenceSample:
    i: int
    q_upper: np.ndarray
    rpy: np.ndarray
    h: float
    q_ref_lower: np.ndarray
    stats: dict
    seed: int

    def to_json(self) -> str:
        return json.dumps({
            "i": self.i,
            "q_upper": [float(v) for v in self.q_upper],
            "rpy": [float(v) for v in self.rpy],
            "h": float(self.h),
            "q_ref_lower": [float(v) for v in self.q_ref_lower],
            "stats": {"iters": int(self.stats["iters"]),
                      "cost": float(self.stats["cost"]),
                      "res_rpy": float(self.stats["res_rpy"]),
                      "res_h": float(self.stats["res_h"])},
            "seed": int(self.seed),
        })


def sample_command(rng: np.random.Generator, ranges: SamplingRanges) -> WbcCommand:
    """Uniform per-axis command draw; reproducible per rng state."""
    roll = rng.uniform(*ranges.roll)
    pitch = rng.uniform(*ranges.pitch)
    yaw = rng.uniform(*ranges.yaw)
    h = rng.uniform(*ranges.height)
    return WbcCommand(rpy=np.array([roll, pitch, yaw]), height=h)


def load_motion_frames(path: str, model: RobotModel) -> np.ndarray:
    """Plain CSV of upper-joint frames: one frame per row, 14 columns, rad."""
    rows = []
    idx = model.upper_indices()
    lo, hi = model.limits_lower[idx], model.limits_upper[idx]
    with open(path) as f:
        for ln, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            vals = np.array([float(v) for v in line.split(",")])
            if vals.shape != (14,):
                raise DatasetError(f"motion file row {ln}: expected 14 columns")
            if np.any(vals < lo) or np.any(vals > hi):
                raise DatasetError(f"motion file frame {ln} violates arm joint limits")
            rows.append(vals)
    if not rows:
        raise DatasetError("motion file has no frames")
    return np.array(rows)


def sample_upper(rng: np.random.Generator, model: RobotModel,
                 ranges: SamplingRanges,
                 motion_frames: np.ndarray | None = None) -> np.ndarray:
    """Upper-body pose draw: uniform within arm limits, or a uniformly random
    frame of a motion file."""
    if ranges.upper_mode == "uniform":
        idx = model.upper_indices()
        return rng.uniform(model.limits_lower[idx], model.limits_upper[idx])
    frames = motion_frames
    if frames is None:
        frames = load_motion_frames(ranges.motion_file, model)
    return frames[int(rng.integers(0, frames.shape[0]))].copy()


def corner_commands(ranges: SamplingRanges) -> list[WbcCommand]:
    """The 8 command-range corner cases: each axis at both of its bounds with
    the other axes neutral (rpy 0, height mid-range)."""
    h_mid = 0.5 * (ranges.height[0] + ranges.height[1])
    out = []
    for axis, (lo, hi) in (("height", ranges.height), ("roll", ranges.roll),
                           ("pitch", ranges.pitch), ("yaw", ranges.yaw)):
        for v in (lo, hi):
            rpy = np.zeros(3)
            h = h_mid
            if axis == "height":
                h = v
            else:
                rpy[{"roll": 0, "pitch": 1, "yaw": 2}[axis]] = v
            out.append(WbcCommand(rpy=rpy, height=h))
    return out


def _sample_rng(seed: int, index: int, attempt: int) -> tuple[np.random.Generator, int]:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index, attempt))
    child = int(ss.generate_state(1)[0])
    return np.random.default_rng(ss), child


# Worker-process state, set once per worker by _init_worker.
_G: dict = {}


def _init_worker(model, ranges, weights, config, seed, force_corners, motion_frames):
    _G.update(model=model, ranges=ranges, weights=weights, config=config,
              seed=seed, force_corners=force_corners, motion_frames=motion_frames)


def _solve_one(index: int):
    model = _G["model"]
    ranges = _G["ranges"]
    corners = corner_commands(ranges) if _G["force_corners"] else []
    attempts = 0
    while True:
        if attempts >= MAX_ATTEMPTS_PER_SAMPLE:
            raise GenerationError(
                f"sample {index}: {attempts} consecutive rejected solves; "
                "weights are likely misconfigured")
        rng, child_seed = _sample_rng(_G["seed"], index, attempts)
        q_upper = sample_upper(rng, model, ranges, _G["motion_frames"])
        if index < len(corners):
            cmd = corners[index]
        else:
            cmd = sample_command(rng, ranges)
        q_low, stats = solve_reference(model, q_upper, cmd,
                                       _G["weights"], _G["config"])
        attempts += 1
        if stats.accepted:
            sample = ReferenceSample(
                i=index, q_upper=q_upper, rpy=cmd.rpy, h=cmd.height,
                q_ref_lower=q_low,
                stats={"iters": stats.iterations, "cost": stats.final_cost,
                       "res_rpy": stats.res_rpy, "res_h": stats.res_h},
                seed=child_seed)
            return index, sample.to_json(), attempts
        sys.stderr.write(f"sample {index} attempt {attempts} rejected: "
                         f"{stats.reject_reason}\n")


@dataclass
class GenerationReport:
    n: int
    seed: int
    attempts: int
    rejected: int
    rejection_rate: float
    res_rpy_histogram: list
    res_h_histogram: list
    max_res_rpy: float
    max_res_h: float

    def to_dict(self) -> dict:
        return {
            "n": self.n, "seed": self.seed, "attempts": self.attempts,
            "rejected": self.rejected, "rejection_rate": self.rejection_rate,
            "res_rpy_histogram": self.res_rpy_histogram,
            "res_h_histogram": self.res_h_histogram,
            "max_res_rpy": self.max_res_rpy, "max_res_h": self.max_res_h,
        }


def generate_dataset(model: RobotModel, n: int, seed: int, out: str,
                     ranges: SamplingRanges | None = None,
                     weights: CostWeights | None = None,
                     config: WbcConfig | None = None,
                     workers: int | None = None,
                     force_corners: bool = True) -> GenerationReport:
    """Write exactly n accepted samples to `out` (JSONL, ordered by index).

    Deterministic: (seed, n, ranges, weights, model) fully determine the file
    contents, independent of the worker count. Aborts when the overall
    rejection rate exceeds 50%.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ranges = ranges or SamplingRanges()
    weights = weights or CostWeights()
    config = config or WbcConfig()
    motion_frames = None
    if ranges.upper_mode == "motion_file":
        motion_frames = load_motion_frames(ranges.motion_file, model)
    workers = workers or min(mp.cpu_count(), n)

    init_args = (model, ranges, weights, config, seed, force_corners, motion_frames)
    results: list[tuple[int, str, int]] = []
    if workers <= 1 or n < 4:
        _init_worker(*init_args)
        for i in range(n):
            results.append(_solve_one(i))
    else:
        with mp.Pool(workers, initializer=_init_worker, initargs=init_args) as pool:
            for r in pool.imap_unordered(_solve_one, range(n), chunksize=4):
                results.append(r)
    results.sort(key=lambda t: t[0])

    attempts = sum(a for _, _, a in results)
    rejected = attempts - n
    rate = rejected / attempts if attempts else 0.0
    lines = [line for _, line, _ in results]
    res_rpy = [json.loads(l)["stats"]["res_rpy"] for l in lines]
    res_h = [json.loads(l)["stats"]["res_h"] for l in lines]
    if rate > 0.5:
        raise GenerationError(
            f"rejection rate {rate:.0%} exceeds 50% ({rejected}/{attempts}); "
            "weights are likely misconfigured")
    with open(out, "w") as f:
        f.write("\n".join(lines) + "\n")

    hist_rpy = np.histogram(res_rpy, bins=10, range=(0.0, 0.05))
    hist_h = np.histogram(res_h, bins=10, range=(0.0, 0.02))
    return GenerationReport(
        n=n, seed=seed, attempts=attempts, rejected=rejected, rejection_rate=rate,
        res_rpy_histogram=[int(v) for v in hist_rpy[0]],
        res_h_histogram=[int(v) for v in hist_h[0]],
        max_res_rpy=float(np.max(res_rpy)), max_res_h=float(np.max(res_h)))


def mirror_maps(model: RobotModel) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Left-right mirror permutations and sign patterns.

    Returns (upper_perm, upper_sign, lower_perm, lower_sign) acting on the
    14-dim upper and 15-dim lower vectors. Joints rotating about x (roll) or
    z (yaw) flip sign under mirroring; y-axis (pitch) joints do not. Valid
    for a left-right symmetric model like the bundled one.
    """
    def signs(joint_indices):
        out = np.ones(len(joint_indices))
        for k, j in enumerate(joint_indices):
            axis = np.abs(model.joint_axis[j])
            if axis[0] > 0.5 or axis[2] > 0.5:  # roll- or yaw-type joint
                out[k] = -1.0
        return out

    nu = len(model.upper_indices())
    upper_perm = np.concatenate([np.arange(7, 14), np.arange(0, 7)])
    upper_sign = signs(model.upper_indices())[upper_perm]
    lower_perm = np.concatenate([np.arange(6, 12), np.arange(0, 6), np.arange(12, 15)])
    lower_sign = signs(model.lower_indices())[lower_perm]
    assert nu == 14
    return upper_perm, upper_sign, lower_perm, lower_sign


def mirror_sample(s: ReferenceSample, maps) -> ReferenceSample:
    """The mirrored twin of a sample: swap sides, negate roll/yaw axes."""
    up, us, lp, ls = maps
    return ReferenceSample(
        i=s.i, q_upper=us * s.q_upper[up],
        rpy=np.array([-s.rpy[0], s.rpy[1], -s.rpy[2]]), h=s.h,
        q_ref_lower=ls * s.q_ref_lower[lp], stats=dict(s.stats), seed=s.seed)


def with_mirrored(samples: list[ReferenceSample],
                  model: RobotModel) -> list[ReferenceSample]:
    """Dataset plus its mirror twins (training augmentation for symmetric
    models; doubles the effective sample count)."""
    maps = mirror_maps(model)
    return list(samples) + [mirror_sample(s, maps) for s in samples]


def mirror_augment(model: RobotModel):
    """Array-level mirror augmentation for the trainer, applied to the
    training split only (see net.train)."""
    up, us, lp, ls = mirror_maps(model)

    def augment(Xt: np.ndarray, Yt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Xm = Xt.copy()
        Xm[:, :14] = us * Xt[:, up]
        Xm[:, 14] = -Xt[:, 14]  # roll
        Xm[:, 16] = -Xt[:, 16]  # yaw
        Ym = ls * Yt[:, lp]
        return np.vstack([Xt, Xm]), np.vstack([Yt, Ym])

    return augment


REQUIRED_KEYS = ("i", "q_upper", "rpy", "h", "q_ref_lower", "stats", "seed")


def read_dataset(path: str) -> list[ReferenceSample]:
    samples = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"line {ln}: not valid JSON ({e})") from e
            for key in REQUIRED_KEYS:
                if key not in raw:
                    raise DatasetError(f"line {ln}: missing key '{key}'")
            q_upper = np.asarray(raw["q_upper"], dtype=float)
            rpy = np.asarray(raw["rpy"], dtype=float)
            q_low = np.asarray(raw["q_ref_lower"], dtype=float)
            if q_upper.shape != (14,):
                raise DatasetError(f"line {ln}: q_upper must have 14 entries")
            if rpy.shape != (3,):
                raise DatasetError(f"line {ln}: rpy must have 3 entries")
            if q_low.shape != (15,):
                raise DatasetError(f"line {ln}: q_ref_lower must have 15 entries")
            samples.append(ReferenceSample(
                i=int(raw["i"]), q_upper=q_upper, rpy=rpy, h=float(raw["h"]),
                q_ref_lower=q_low, stats=dict(raw["stats"]), seed=int(raw["seed"])))
    if not samples:
        raise DatasetError("dataset file has no samples")
    return samples


@dataclass
class ValidationReport:
    n: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"n": self.n, "ok": self.ok, "violations": self.violations}


def validate_dataset(path: str, model: RobotModel | None = None, *,
                     recompute_tol_rpy: float = 0.02,
                     recompute_tol_h: float = 0.01) -> ValidationReport:
    """Re-check every sample invariant without any solver.

    Joint limits, finite residuals, and FK-recomputed torso residuals (via
    foot-anchored base reconstruction) against the stored values.
    """
    model = model or load_humanoid()
    samples = read_dataset(path)
    low_idx = model.lower_indices()
    lo, hi = model.limits_lower[low_idx], model.limits_upper[low_idx]
    up_idx = model.upper_indices()
    ulo, uhi = model.limits_lower[up_idx], model.limits_upper[up_idx]
    report = ValidationReport(n=len(samples))
    for k, s in enumerate(samples, start=1):
        where = f"line {k} (i={s.i})"
        if np.any(s.q_ref_lower < lo) or np.any(s.q_ref_lower > hi):
            report.violations.append(f"{where}: q_ref_lower violates joint limits")
            continue
        if np.any(s.q_upper < ulo - 1e-9) or np.any(s.q_upper > uhi + 1e-9):
            report.violations.append(f"{where}: q_upper violates joint limits")
            continue
        vals = [s.h, *s.rpy, s.stats.get("res_rpy"), s.stats.get("res_h")]
        if not np.all(np.isfinite(np.asarray(vals, dtype=float))):
            report.violations.append(f"{where}: non-finite fields")
            continue
        rpy_a, h_a, margin = achieved_torso(model, s.q_upper, s.q_ref_lower)
        if margin < 0:
            report.violations.append(f"{where}: negative CoM margin {margin:.4f}")
            continue
        from .geometry import rotation_angle, rpy_to_matrix
        res_rpy = rotation_angle(rpy_to_matrix(rpy_a), rpy_to_matrix(s.rpy))
        res_h = abs(h_a - s.h)
        if abs(res_rpy - s.stats["res_rpy"]) > recompute_tol_rpy:
            report.violations.append(
                f"{where}: recomputed torso residual {res_rpy:.4f} disagrees "
                f"with stored {s.stats['res_rpy']:.4f}")
        if abs(res_h - s.stats["res_h"]) > recompute_tol_h:
            report.violations.append(
                f"{where}: recomputed height residual {res_h:.4f} disagrees "
                f"with stored {s.stats['res_h']:.4f}")
    return report
