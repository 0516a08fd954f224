"""Human-to-robot hand retargeting over keypoint vectors.

Five vectors define the mapping for a three-fingered hand: wrist to each
fingertip (overall pose) and thumb tip to index/middle tips (fine precision).
The objective is the summed squared distance between corresponding (scaled)
human vectors and the robot-hand vectors from forward kinematics, minimized
over the 7 hand joints under their box limits by damped Gauss-Newton with
per-step projection; returned joints satisfy the box exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import fk
from .model import BasePose, RobotModel

VECTOR_PAIRS = (
    ("wrist", "thumb_tip"),
    ("wrist", "index_tip"),
    ("wrist", "middle_tip"),
    ("thumb_tip", "index_tip"),
    ("thumb_tip", "middle_tip"),
)
N_VECTORS = 5


@dataclass
class HandKeypoints:
    """Wrist and fingertip positions in the wrist frame, plus a scale factor
    applied when forming vectors (human-to-robot size calibration)."""

    wrist: np.ndarray
    thumb_tip: np.ndarray
    index_tip: np.ndarray
    middle_tip: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        for name in ("wrist", "thumb_tip", "index_tip", "middle_tip"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"keypoint '{name}' must be 3 finite values")
            setattr(self, name, v)
        if not self.scale > 0:
            raise ValueError("scale must be > 0")

    @staticmethod
    def from_json(doc: dict) -> "HandKeypoints":
        return HandKeypoints(
            wrist=np.asarray(doc["wrist"], dtype=float),
            thumb_tip=np.asarray(doc["thumb_tip"], dtype=float),
            index_tip=np.asarray(doc["index_tip"], dtype=float),
            middle_tip=np.asarray(doc["middle_tip"], dtype=float),
            scale=float(doc.get("scale", 1.0)))


def compute_keypoint_vectors(keypoints: HandKeypoints) -> np.ndarray:
    """The five scaled keypoint vectors, shape (5, 3)."""
    pts = {"wrist": keypoints.wrist, "thumb_tip": keypoints.thumb_tip,
           "index_tip": keypoints.index_tip, "middle_tip": keypoints.middle_tip}
    return np.array([keypoints.scale * (pts[b] - pts[a]) for a, b in VECTOR_PAIRS])


def robot_keypoint_vectors(hand: RobotModel, q: np.ndarray) -> np.ndarray:
    """Robot-hand keypoint vectors from forward kinematics, shape (5, 3)."""
    res = fk(hand, BasePose.identity(), q)
    pts = {name: res.frames[name][0]
           for name in ("wrist", "thumb_tip", "index_tip", "middle_tip")}
    return np.array([pts[b] - pts[a] for a, b in VECTOR_PAIRS])


@dataclass
class RetargetResult:
    q: np.ndarray
    objective: float
    iterations: int
    converged: bool


def retarget(hand: RobotModel, human_vectors: np.ndarray,
             q_init: np.ndarray | None = None, *,
             bounds: tuple[np.ndarray, np.ndarray] | None = None,
             max_iterations: int = 200) -> RetargetResult:
    """Minimize the summed squared keypoint-vector distance within the box.

    `bounds` overrides the model joint limits (a degenerate box freezes the
    hand). Deterministic per (inputs, q_init); on iteration exhaustion the
    best iterate so far is returned with converged=False.
    """
    human = np.asarray(human_vectors, dtype=float)
    if human.shape != (N_VECTORS, 3):
        raise ValueError(f"expected ({N_VECTORS}, 3) human vectors")
    lo, hi = bounds if bounds is not None else (hand.limits_lower, hand.limits_upper)
    nq = hand.nq
    q = (0.5 * (lo + hi)).copy() if q_init is None else np.asarray(q_init, dtype=float).copy()
    q = np.clip(q, lo, hi)

    tips = {name: (hand.link_index[hand.frames[name].link])
            for name in ("wrist", "thumb_tip", "index_tip", "middle_tip")}

    def vectors_and_jac(qv):
        res = fk(hand, BasePose.identity(), qv)
        pts = {}
        jacs = {}
        for name, li in tips.items():
            p = res.frames[name][0]
            pts[name] = p
            mask = hand.ancestor_joints_of_link[li]
            Jp = np.zeros((3, nq))
            if mask.any():
                idx = np.where(mask)[0]
                axes = res.joint_axis_world[idx]
                arm = p[None, :] - res.joint_pos[idx]
                Jp[:, idx] = np.cross(axes, arm).T
            jacs[name] = Jp
        r = np.empty(N_VECTORS * 3)
        J = np.empty((N_VECTORS * 3, nq))
        for k, (a, b) in enumerate(VECTOR_PAIRS):
            r[3 * k:3 * k + 3] = human[k] - (pts[b] - pts[a])
            J[3 * k:3 * k + 3] = -(jacs[b] - jacs[a])
        return r, J

    r, J = vectors_and_jac(q)
    obj = float(r @ r)
    mu = 1e-6
    converged = False
    iters = 0
    for it in range(max_iterations):
        iters = it + 1
        g = J.T @ r
        H = J.T @ J
        accepted = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(H + mu * np.eye(nq), -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            q_new = np.clip(q + delta, lo, hi)
            r_new, J_new = vectors_and_jac(q_new)
            obj_new = float(r_new @ r_new)
            if obj_new <= obj:
                improvement = obj - obj_new
                step = float(np.linalg.norm(q_new - q))
                q, r, J, obj = q_new, r_new, J_new, obj_new
                mu = max(1e-12, mu / 3.0)
                accepted = True
                if step <= 1e-10 or improvement <= 1e-12:
                    converged = True
                break
            mu *= 10.0
            if mu > 1e12:
                break
        if not accepted:
            pg = np.where((q <= lo) & (g > 0), 0.0,
                          np.where((q >= hi) & (g < 0), 0.0, g))
            converged = bool(np.linalg.norm(pg) <= 1e-8)
            break
        if converged:
            break
    return RetargetResult(q=q, objective=obj, iterations=iters, converged=converged)
