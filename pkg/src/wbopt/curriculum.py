"""Training-curriculum schedules for an external RL trainer.

Randomization activation steps, the linear gait-frequency and stance-rate
ramps, the gait clock signal, and command-set sampling. Everything here is a
pure function of its inputs.

The published schedule: height randomization from step 100 (range 0.5-0.8),
torso roll/pitch/yaw from step 2000, arm targets from step 4000; gait
frequency ramps 1.3 -> 1.0 over steps 5000-10000 and stance rate 0.2 -> 0.5
over steps 1000-2000. Before activation the height target is 0.8, rpy targets
are 0 and arm targets sit at the default pose. Velocity-command ranges are
not published; the defaults here are conservative and marked as such.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import SamplingRanges
from .model import RobotModel


@dataclass
class CurriculumSchedule:
    begin_height: int = 100
    begin_roll: int = 2000
    begin_pitch: int = 2000
    begin_yaw: int = 2000
    begin_arms: int = 4000
    gait_freq_begin: int = 5000
    gait_freq_final: int = 10000
    gait_freq_range: tuple[float, float] = (1.3, 1.0)
    stance_begin: int = 1000
    stance_final: int = 2000
    stance_range: tuple[float, float] = (0.2, 0.5)
    default_height: float = 0.8
    ranges: SamplingRanges = field(default_factory=SamplingRanges)
    # heuristic defaults; the published schedule does not cover velocity
    vx_range: tuple[float, float] = (-0.5, 0.5)
    vy_range: tuple[float, float] = (-0.3, 0.3)
    vyaw_range: tuple[float, float] = (-0.5, 0.5)

    def __post_init__(self):
        if self.gait_freq_begin > self.gait_freq_final:
            raise ValueError("gait frequency ramp: begin must be <= final")
        if self.stance_begin > self.stance_final:
            raise ValueError("stance ramp: begin must be <= final")


def _linear_ramp(s: float, begin: int, final: int,
                 values: tuple[float, float]) -> float:
    v0, v1 = values
    if s < begin:
        return v0
    if s >= final:
        return v1
    return v0 + (v1 - v0) * (s - begin) / (final - begin)


def gait_frequency(s: float, schedule: CurriculumSchedule | None = None) -> float:
    """1.3 before step 5000, linear to 1.0 over [5000, 10000], then 1.0."""
    sched = schedule or CurriculumSchedule()
    return _linear_ramp(s, sched.gait_freq_begin, sched.gait_freq_final,
                        sched.gait_freq_range)


def stance_rate(s: float, schedule: CurriculumSchedule | None = None) -> float:
    """0.2 before step 1000, linear to 0.5 over [1000, 2000], then 0.5.

    The schedule table is taken as authoritative for the pre-ramp guard (the
    ramp interval itself starts at 1000).
    """
    sched = schedule or CurriculumSchedule()
    return _linear_ramp(s, sched.stance_begin, sched.stance_final,
                        sched.stance_range)


def gait_clock(t: float, frequency: float) -> np.ndarray:
    """Unit-norm periodic phase signal (sin 2*pi*f*t, cos 2*pi*f*t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    phase = 2.0 * np.pi * frequency * t
    return np.array([np.sin(phase), np.cos(phase)])


@dataclass
class CommandSet:
    height: float
    rpy: np.ndarray  # (3,)
    arms: np.ndarray  # (14,)
    velocity: np.ndarray  # (vx, vy, vyaw)


def sample_command_set(s: float, rng: np.random.Generator,
                       schedule: CurriculumSchedule,
                       model: RobotModel) -> CommandSet:
    """Curriculum-gated command draw for one environment reset.

    Each quantity keeps its pre-activation default until its begin step, then
    samples uniformly within its range. Velocity commands are active from
    step 0 (locomotion is the initial task).
    """
    r = schedule.ranges
    height = schedule.default_height
    if s >= schedule.begin_height:
        height = rng.uniform(*r.height)
    rpy = np.zeros(3)
    if s >= schedule.begin_roll:
        rpy[0] = rng.uniform(*r.roll)
    if s >= schedule.begin_pitch:
        rpy[1] = rng.uniform(*r.pitch)
    if s >= schedule.begin_yaw:
        rpy[2] = rng.uniform(*r.yaw)
    arms = np.zeros(14)
    if s >= schedule.begin_arms:
        idx = model.upper_indices()
        arms = rng.uniform(model.limits_lower[idx], model.limits_upper[idx])
    velocity = np.array([rng.uniform(*schedule.vx_range),
                         rng.uniform(*schedule.vy_range),
                         rng.uniform(*schedule.vyaw_range)])
    return CommandSet(height=height, rpy=rpy, arms=arms, velocity=velocity)


def schedule_snapshot(s: float, schedule: CurriculumSchedule | None = None) -> dict:
    """All schedule values at a global step, for inspection tooling."""
    sched = schedule or CurriculumSchedule()
    return {
        "step": s,
        "gait_frequency": gait_frequency(s, sched),
        "stance_rate": stance_rate(s, sched),
        "height_active": s >= sched.begin_height,
        "roll_active": s >= sched.begin_roll,
        "pitch_active": s >= sched.begin_pitch,
        "yaw_active": s >= sched.begin_yaw,
        "arms_active": s >= sched.begin_arms,
    }
