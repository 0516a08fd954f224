"""Tracking-error metrics, workspace-range sweeps and I.D./O.O.D. curves.

"Achieved" at desk scale means a foot-anchored forward-kinematics evaluation
of the lower-body reference pose (from the trajectory optimizer or from the
adaptation network) -- there is no physics rollout here, and every report
labels the numbers as FK evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .model import RobotModel
from .net import MlpParams, forward
from .wbc import CostWeights, WbcCommand, WbcConfig, achieved_torso, solve_reference

AXES = ("roll", "pitch", "yaw", "height")


class CmdSample(NamedTuple):
    """One command tuple: torso rpy, base height, optional base velocity."""

    rpy: np.ndarray
    height: float
    velocity: np.ndarray | None = None


@dataclass
class TrackingErrors:
    """Mean absolute command-vs-achieved errors per axis.

    e_velocity stays None unless velocity pairs were supplied; it is never
    zero-filled.
    """

    e_yaw: float
    e_pitch: float
    e_roll: float
    e_height: float
    e_velocity: float | None = None

    def to_dict(self) -> dict:
        out = {"E_y": self.e_yaw, "E_p": self.e_pitch, "E_r": self.e_roll,
               "E_h": self.e_height}
        if self.e_velocity is not None:
            out["E_v"] = self.e_velocity
        return out


def tracking_errors(pairs: Sequence[tuple[CmdSample, CmdSample]]) -> TrackingErrors:
    """Per-axis mean absolute error over (commanded, achieved) pairs."""
    if not pairs:
        raise ValueError("pairs must be nonempty")
    drpy = np.array([np.abs(np.asarray(c.rpy) - np.asarray(a.rpy))
                     for c, a in pairs])
    dh = np.array([abs(c.height - a.height) for c, a in pairs])
    vel_pairs = [(c.velocity, a.velocity) for c, a in pairs
                 if c.velocity is not None and a.velocity is not None]
    e_v = None
    if vel_pairs:
        e_v = float(np.mean([np.mean(np.abs(np.asarray(cv) - np.asarray(av)))
                             for cv, av in vel_pairs]))
    return TrackingErrors(
        e_roll=float(drpy[:, 0].mean()), e_pitch=float(drpy[:, 1].mean()),
        e_yaw=float(drpy[:, 2].mean()), e_height=float(dh.mean()),
        e_velocity=e_v)


@dataclass
class AxisRange:
    axis: str
    min: float
    max: float

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError("min must be <= max")

    def to_dict(self) -> dict:
        return {"axis": self.axis, "min": self.min, "max": self.max}


@dataclass
class SweepCurve:
    axis: str
    commanded: np.ndarray  # strictly increasing
    achieved: np.ndarray
    id_range: tuple[float, float]

    def __post_init__(self):
        self.commanded = np.asarray(self.commanded, dtype=float)
        self.achieved = np.asarray(self.achieved, dtype=float)
        if self.commanded.shape != self.achieved.shape:
            raise ValueError("commanded and achieved must have equal length")
        if np.any(np.diff(self.commanded) <= 0):
            raise ValueError("commanded values must be strictly increasing")

    def to_dict(self) -> dict:
        return {"axis": self.axis,
                "commanded": [float(v) for v in self.commanded],
                "achieved": [float(v) for v in self.achieved],
                "id_range": [float(self.id_range[0]), float(self.id_range[1])],
                "semantics": "fk-evaluation"}

    @staticmethod
    def from_dict(doc: dict) -> "SweepCurve":
        return SweepCurve(axis=doc["axis"], commanded=doc["commanded"],
                          achieved=doc["achieved"],
                          id_range=(doc["id_range"][0], doc["id_range"][1]))


Resolver = Callable[[float], float]
"""Maps one commanded axis value to the achieved value on that axis."""


def axis_range_sweep(resolver: Resolver, axis: str, *, threshold: float = 0.05,
                     step: float = 0.01, start: float | None = None,
                     limit: float = 2.5) -> AxisRange:
    """Widest contiguous command interval around the start point where the
    achieved value stays within `threshold` of the command.

    Sweeps outward in +/- step until the first failure (or `limit`).
    """
    if axis not in AXES:
        raise ValueError(f"unknown axis '{axis}'")
    center = start if start is not None else (0.65 if axis == "height" else 0.0)
    if abs(resolver(center) - center) > threshold:
        raise RuntimeError(f"resolver fails at the sweep start {center}")
    tol = threshold * (1.0 + 1e-9)  # keep grid-accumulation noise off the boundary
    ends = []
    for direction in (-1.0, 1.0):
        good = center
        k = 1
        while True:
            c = center + direction * k * step
            if abs(c - center) > limit * (1.0 + 1e-9):
                break
            if abs(resolver(c) - c) > tol:
                break
            good = c
            k += 1
        ends.append(good)
    return AxisRange(axis=axis, min=min(ends), max=max(ends))


def ood_sweep(resolver: Resolver, axis: str, id_range: tuple[float, float],
              ood_range: tuple[float, float], step: float = 0.01) -> SweepCurve:
    """Command-response curve over `ood_range` with I.D. boundary markers."""
    if not (ood_range[0] <= id_range[0] and ood_range[1] >= id_range[1]):
        raise ValueError("ood_range must contain id_range")
    commanded = np.arange(ood_range[0], ood_range[1] + step / 2, step)
    achieved = np.array([resolver(c) for c in commanded])
    return SweepCurve(axis=axis, commanded=commanded, achieved=achieved,
                      id_range=id_range)


AXIS_INDEX = {"roll": 0, "pitch": 1, "yaw": 2}


def _axis_command(axis: str, value: float, neutral_height: float) -> WbcCommand:
    rpy = np.zeros(3)
    h = neutral_height
    if axis == "height":
        h = value
    else:
        rpy[AXIS_INDEX[axis]] = value
    return WbcCommand(rpy=rpy, height=h)


def _achieved_axis(model: RobotModel, axis: str, q_upper: np.ndarray,
                   q_lower: np.ndarray) -> float:
    rpy_a, h_a, _ = achieved_torso(model, q_upper, q_lower)
    return float(h_a) if axis == "height" else float(rpy_a[AXIS_INDEX[axis]])


def to_resolver(model: RobotModel, axis: str, q_upper: np.ndarray | None = None,
                weights: CostWeights | None = None,
                config: WbcConfig | None = None,
                neutral_height: float = 0.72) -> Resolver:
    """Trajectory-optimization route: command -> solve -> FK evaluation."""
    q_upper = np.zeros(14) if q_upper is None else q_upper

    def resolve(value: float) -> float:
        cmd = _axis_command(axis, value, neutral_height)
        q_low, _ = solve_reference(model, q_upper, cmd, weights, config)
        return _achieved_axis(model, axis, q_upper, q_low)

    return resolve


def net_resolver(model: RobotModel, params: MlpParams, axis: str,
                 q_upper: np.ndarray | None = None,
                 neutral_height: float = 0.72) -> Resolver:
    """Adaptation-network route: command -> forward pass -> FK evaluation."""
    q_upper = np.zeros(14) if q_upper is None else q_upper

    def resolve(value: float) -> float:
        cmd = _axis_command(axis, value, neutral_height)
        x = np.concatenate([q_upper, cmd.rpy, [cmd.height]])
        q_low = forward(params, x)
        return _achieved_axis(model, axis, q_upper, q_low)

    return resolve


def net_vs_to_consistency(model: RobotModel, params: MlpParams,
                          commands: Sequence[WbcCommand],
                          q_uppers: Sequence[np.ndarray],
                          weights: CostWeights | None = None,
                          config: WbcConfig | None = None) -> float:
    """Mean absolute difference between the network's and the optimizer's
    achieved-torso residuals over the given commands."""
    from .geometry import rotation_angle, rpy_to_matrix

    diffs = []
    for cmd, qu in zip(commands, q_uppers):
        q_to, _ = solve_reference(model, qu, cmd, weights, config)
        q_net = forward(params, np.concatenate([qu, cmd.rpy, [cmd.height]]))
        R_cmd = rpy_to_matrix(cmd.rpy)
        res = []
        for q_low in (q_to, q_net):
            rpy_a, _, _ = achieved_torso(model, qu, q_low)
            res.append(rotation_angle(rpy_to_matrix(rpy_a), R_cmd))
        diffs.append(abs(res[0] - res[1]))
    return float(np.mean(diffs))
