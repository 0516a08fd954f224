"""Multi-target weighted inverse kinematics for the upper body.

Resolves three 6D targets (head, left wrist, right wrist) into upper-body
joint angles plus the intermediate whole-body command (rpy, h) that the
lower-body stack tracks. The optimization variable is

    q = [q_head (3), q_left_arm (7), q_right_arm (7), rpy (3), h (1)]

where (rpy, h) move a virtual torso root: the torso link is placed at
(0, 0, h) + R(rpy) @ c_t with orientation R(rpy), c_t being the zero-pose
offset from the base to the torso link. Per-target cost is squared position
distance plus lambda times the squared Frobenius distance of rotations;
posture regularization pulls toward the reference with the (rpy, h) block
weighted strictly heavier than the joint blocks so whole-body motion engages
only when the arms and head cannot reach alone.

Levenberg-Marquardt with adaptive damping (x10 on rejection, /3 on
acceptance), joint limits enforced by projection after every step. The
resulting (rpy, h) is passed downstream unclamped: out-of-range commands are
the adaptation network's job.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import rpy_rate_matrix, rpy_to_matrix
from .kinematics import fk, frame_jacobian, standing_base_pose
from .model import BasePose, RobotModel
from .wbc import WbcCommand

NV = 21  # 3 head + 7 + 7 arms + 3 rpy + 1 h
TARGET_FRAMES = ("head", "left_wrist", "right_wrist")


@dataclass
class IkTargets:
    """SE(3) targets for the head and both wrists."""

    head: tuple[np.ndarray, np.ndarray]  # (position, rotation)
    left: tuple[np.ndarray, np.ndarray]
    right: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        for name in ("head", "left", "right"):
            p, R = getattr(self, name)
            p = np.asarray(p, dtype=float)
            R = np.asarray(R, dtype=float)
            if p.shape != (3,) or R.shape != (3, 3):
                raise ValueError(f"target '{name}' must be a 3-vector and 3x3 matrix")
            if np.linalg.norm(R.T @ R - np.eye(3)) > 1e-8:
                raise ValueError(f"target '{name}' rotation is not orthonormal")
            setattr(self, name, (p, R))

    def as_list(self):
        return [self.head, self.left, self.right]


@dataclass
class IkWeights:
    rotation: float = 0.1  # lambda, rotation-vs-position weight
    w_head: float = 1e-7
    w_arm: float = 1e-7
    w_rpy: float = 1e-4
    w_h: float = 1e-4

    def __post_init__(self):
        if self.rotation <= 0:
            raise ValueError("rotation weight must be > 0")
        if min(self.w_head, self.w_arm, self.w_rpy, self.w_h) < 0:
            raise ValueError("posture weights must be >= 0")
        if not (self.w_rpy > self.w_head and self.w_rpy > self.w_arm
                and self.w_h > self.w_head and self.w_h > self.w_arm):
            raise ValueError("(rpy, h) posture weights must exceed joint weights")

    def vector(self) -> np.ndarray:
        w = np.empty(NV)
        w[0:3] = self.w_head
        w[3:17] = self.w_arm
        w[17:20] = self.w_rpy
        w[20] = self.w_h
        return w


@dataclass
class IkSolution:
    q_head: np.ndarray
    q_left_arm: np.ndarray
    q_right_arm: np.ndarray
    command: WbcCommand  # the intermediate (rpy, h)
    pos_residuals: dict  # target name -> meters
    rot_residuals: dict  # target name -> Frobenius norm
    iterations: int
    converged: bool
    objective: float

    def q_vector(self) -> np.ndarray:
        return np.concatenate([self.q_head, self.q_left_arm, self.q_right_arm,
                               self.command.rpy, [self.command.height]])


@dataclass
class UpperChain:
    """The torso-rooted submodel plus the virtual-root geometry."""

    sub: RobotModel
    c_t: np.ndarray  # zero-pose base -> torso-link offset
    h0: float  # standing base height
    lo: np.ndarray  # variable lower bounds (joints, rpy, h)
    hi: np.ndarray
    q_ref: np.ndarray  # posture reference


def upper_submodel(model: RobotModel, *, h_bounds: tuple[float, float] = (0.3, 0.9),
                   rpy_bound: float = np.pi) -> UpperChain:
    """Extract the head+arms chain rooted at the torso link."""
    torso_link = model.frames["torso"].link
    order = list(model.head_indices()) + list(model.upper_indices())
    joints = tuple(model.joints[i] for i in order)
    keep_links = {torso_link}
    for j in joints:
        keep_links.add(j.child_link)
    links = tuple(l for l in model.links if l.name in keep_links)
    frames = {n: f for n, f in model.frames.items()
              if n in TARGET_FRAMES and f.link in keep_links}
    groups = {"head": tuple(model.joints[i].name for i in model.head_indices()),
              "left_arm": model.groups["left_arm"],
              "right_arm": model.groups["right_arm"]}
    sub = RobotModel(root_link=torso_link, links=links, joints=joints,
                     groups=groups, frames=frames, feet=None)
    sub._finalize()

    base0 = standing_base_pose(model)
    res0 = fk(model, base0, np.zeros(model.nq))
    ti = model.link_index[torso_link]
    c_t = res0.link_pos[ti] - np.asarray(base0.position)
    lo = np.concatenate([sub.limits_lower,
                         [-rpy_bound] * 3, [h_bounds[0]]])
    hi = np.concatenate([sub.limits_upper,
                         [rpy_bound] * 3, [h_bounds[1]]])
    q_ref = np.zeros(NV)
    q_ref[20] = float(base0.position[2])
    return UpperChain(sub=sub, c_t=c_t, h0=float(base0.position[2]),
                      lo=lo, hi=hi, q_ref=q_ref)


def _virtual_base(chain: UpperChain, rpy: np.ndarray, h: float) -> BasePose:
    R = rpy_to_matrix(rpy)
    return BasePose(position=np.array([0.0, 0.0, h]) + R @ chain.c_t, rpy=rpy.copy())


def residual(chain: UpperChain, q: np.ndarray, targets: IkTargets,
             rotation_weight: float) -> tuple[np.ndarray, np.ndarray]:
    """Stacked target residual (36,) and its Jacobian (36, 21).

    Blocks per target: [p_target - p_link; sqrt(lambda) vec(R_target - R_link)].
    """
    nq = chain.sub.nq
    rpy, h = q[17:20], float(q[20])
    base = _virtual_base(chain, rpy, h)
    res = fk(chain.sub, base, q[:nq])
    E = rpy_rate_matrix(rpy)
    Rc_t = rpy_to_matrix(rpy) @ chain.c_t
    sq = np.sqrt(rotation_weight)

    # Columns of the base twist induced by (rpy, h): rotating about the pinned
    # point (0, 0, h) also translates the virtual root.
    base_cols = np.zeros((6, 4))
    for i in range(3):
        w = E[:, i]
        base_cols[0:3, i] = np.cross(w, Rc_t)
        base_cols[3:6, i] = w
    base_cols[2, 3] = 1.0  # d position / dh

    r = np.zeros(36)
    J = np.zeros((36, NV))
    for t_idx, (name, target) in enumerate(zip(TARGET_FRAMES, targets.as_list())):
        p_t, R_t = target
        p_l, R_l = res.frames[name]
        J6 = frame_jacobian(chain.sub, base, q[:nq], name, res=res)
        row = 12 * t_idx
        r[row:row + 3] = p_t - p_l
        r[row + 3:row + 12] = sq * (R_t - R_l).reshape(9)
        Jvar = np.zeros((6, NV))
        Jvar[:, :nq] = J6[:, 6:]
        Jvar[:, 17:21] = J6[:, :6] @ base_cols
        J[row:row + 3] = -Jvar[0:3]
        # d vec(R_l)/d var = vec(skew(w_var) R_l)
        W = Jvar[3:6]
        C = np.cross(W.T[:, None, :], R_l.T[None, :, :])
        J[row + 3:row + 12] = -sq * C.transpose(0, 2, 1).reshape(NV, 9).T
    return r, J


def solve_ik(model: RobotModel, targets: IkTargets,
             weights: IkWeights | None = None,
             q_init: np.ndarray | None = None, *,
             chain: UpperChain | None = None,
             max_iterations: int = 100) -> IkSolution:
    """Damped least squares with posture weighting and limit projection.

    The weighted objective is nonincreasing over accepted steps; converged
    when the step norm falls below 1e-8 or the improvement below 1e-10.
    """
    weights = weights or IkWeights()
    chain = chain or upper_submodel(model)
    q = chain.q_ref.copy() if q_init is None else np.asarray(q_init, dtype=float).copy()
    if q.shape != (NV,):
        raise ValueError(f"q_init must have dim {NV}")
    q = np.clip(q, chain.lo, chain.hi)
    W = weights.vector()
    sqW = np.sqrt(W)

    def objective(qv, r):
        dq = qv - chain.q_ref
        return float(r @ r + W @ (dq * dq))

    r, J = residual(chain, q, targets, weights.rotation)
    F = objective(q, r)
    mu = 1e-4
    converged = False
    iters = 0
    for it in range(max_iterations):
        iters = it + 1
        g = J.T @ r + W * (q - chain.q_ref)
        H = J.T @ J + np.diag(W)
        accepted = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(H + mu * np.eye(NV), -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            q_new = np.clip(q + delta, chain.lo, chain.hi)
            r_new, J_new = residual(chain, q_new, targets, weights.rotation)
            F_new = objective(q_new, r_new)
            if F_new <= F:
                improvement = F - F_new
                step = float(np.linalg.norm(q_new - q))
                q, r, J, F = q_new, r_new, J_new, F_new
                mu = max(1e-12, mu / 3.0)
                accepted = True
                if step <= 1e-8 or improvement <= 1e-10:
                    converged = True
                break
            mu *= 10.0
            if mu > 1e12:
                break
        if not accepted or converged:
            converged = converged or not accepted and _stationary(g, q, chain)
            break

    nq = chain.sub.nq
    head_n = len(model.head_indices())
    pos_res = {}
    rot_res = {}
    for t_idx, name in enumerate(TARGET_FRAMES):
        row = 12 * t_idx
        pos_res[name] = float(np.linalg.norm(r[row:row + 3]))
        rot_res[name] = float(np.linalg.norm(r[row + 3:row + 12])
                              / np.sqrt(weights.rotation))
    return IkSolution(
        q_head=q[0:head_n].copy(),
        q_left_arm=q[head_n:head_n + 7].copy(),
        q_right_arm=q[head_n + 7:nq].copy(),
        command=WbcCommand(rpy=q[17:20].copy(), height=float(q[20])),
        pos_residuals=pos_res, rot_residuals=rot_res,
        iterations=iters, converged=converged, objective=F)


def _stationary(g: np.ndarray, q: np.ndarray, chain: UpperChain) -> bool:
    """Projected-gradient stationarity at the bounds."""
    pg = np.where((q <= chain.lo) & (g > 0), 0.0,
                  np.where((q >= chain.hi) & (g < 0), 0.0, g))
    return bool(np.linalg.norm(pg) <= 1e-6)


def default_targets(model: RobotModel, chain: UpperChain | None = None) -> IkTargets:
    """FK of the posture reference; a convenient starting point for clients."""
    chain = chain or upper_submodel(model)
    q = chain.q_ref
    base = _virtual_base(chain, q[17:20], float(q[20]))
    res = fk(chain.sub, base, q[:chain.sub.nq])
    return IkTargets(head=res.frames["head"],
                     left=res.frames["left_wrist"],
                     right=res.frames["right_wrist"])
