"""Lower-body reference-pose generation by trajectory optimization.

Given a fixed upper-body configuration and a torso command (orientation rpy +
base height h), assemble an optimal-control problem whose running cost is

    ||x_t - x_ref||^2_Qx + ||u_t||^2_R + ||c_t - c_ref||^2_QCoM
    + Q_torso * ||R_torso - R_ref(rpy)||^2_F + w_h (h_t - h)^2
    + foot-pinning + support-polygon-barrier (+ joint-limit hinge) terms

over double-integrator dynamics in configuration space, solve it with the
box-DDP solver, and harvest the terminal state as the lower-body reference
pose.

Contact surrogate
-----------------
The physically exact formulation is a rigid-body multi-contact problem with
wrench-cone constraints. At desk scale we replace it by (a) stiff foot-pinning
costs that hold both soles at their initial ground poses and (b) a smooth
hinge barrier that keeps the CoM ground projection a configurable margin
inside the support polygon. This preserves the cost structure and the
static-feasibility semantics of double support without a contact-dynamics
engine; it is the module's headline approximation.

The CoM reference is the area centroid of the initial support polygon; its
weight acts on xy only by default so the height command owns the z axis. The
state-regularization reference is the initial stance. The upper body is
folded into a single composite rigid body attached to the torso link, which
is exact for all cost terms here and keeps the per-step kinematics small.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import boxddp
from .geometry import (
    polygon_centroid,
    rotation_angle,
    rpy_rate_matrix_batch,
    rpy_to_matrix,
)
from .kinematics import (
    BatchFk,
    fk,
    fk_batch,
    foot_corners_world,
    standing_base_pose,
    support_polygon,
)
from .model import BasePose, Link, RobotModel

NPOSE = 21  # base pose (6) + lower joints (15)
NX = 42
NU = 21


@dataclass
class WbcCommand:
    """Torso-orientation target (rad) and base-height target (m).

    No range restriction: out-of-distribution inputs are legal by design.
    """

    rpy: np.ndarray
    height: float

    def __post_init__(self):
        self.rpy = np.asarray(self.rpy, dtype=float)
        if self.rpy.shape != (3,) or not np.all(np.isfinite(self.rpy)):
            raise ValueError("rpy must be 3 finite values")
        if not np.isfinite(self.height):
            raise ValueError("height must be finite")


@dataclass
class CostWeights:
    """Weights of the reference-pose cost; none of these are published
    values, see docs/wbc_weights.md."""

    q_state: float = 0.1
    r_control: float = 1e-3
    q_com: tuple[float, float, float] = (10.0, 10.0, 0.0)
    q_torso: float = 50.0
    w_height: float = 100.0
    w_feet: float = 1e4
    w_polygon: float = 1e3
    w_limits: float = 1e4
    polygon_margin_min: float = 0.02
    limit_margin: float = 0.03
    terminal_scale: float = 60.0
    w_terminal_vel: float = 5.0

    def __post_init__(self):
        vals = [self.q_state, self.q_torso, self.w_height, self.w_feet,
                self.w_polygon, self.w_limits, *self.q_com]
        if any(v < 0 for v in vals):
            raise ValueError("cost weights must be >= 0")
        if self.r_control <= 0:
            raise ValueError("control regularization must be > 0")


@dataclass
class WbcConfig:
    horizon: int = 20
    dt: float = 0.05
    u_bound: float = 50.0
    max_iterations: int = 120
    tol_cost: float = 1e-5
    foot_tol_pos: float = 5e-3
    foot_tol_rot: float = 0.01


def reduce_to_lower(model: RobotModel, q_upper: np.ndarray) -> RobotModel:
    """Fold arms and head (held fixed at q_upper / zero) into a composite
    rigid body on the torso link; exact for CoM and every lower-body frame."""
    q_full = np.zeros(model.nq)
    q_full[model.upper_indices()] = q_upper
    res = fk(model, BasePose.identity(), q_full)

    torso_link = model.frames["torso"].link
    lower_idx = model.lower_indices()
    keep_links = {model.root_link}
    for i in lower_idx:
        keep_links.add(model.joints[i].child_link)
    if torso_link not in keep_links:
        raise ValueError("torso link must be driven by the lower joints")

    ti = model.link_index[torso_link]
    Rt, pt = res.link_rot[ti], res.link_pos[ti]
    comp_mass = 0.0
    comp_weighted = np.zeros(3)
    for li, link in enumerate(model.links):
        if link.name in keep_links and link.name != torso_link:
            continue
        c_world = res.link_pos[li] + res.link_rot[li] @ link.com
        comp_mass += link.mass
        comp_weighted += link.mass * (Rt.T @ (c_world - pt))
    comp_com = comp_weighted / comp_mass

    links = []
    for link in model.links:
        if link.name == torso_link:
            links.append(Link(name=link.name, mass=comp_mass, com=comp_com))
        elif link.name in keep_links:
            links.append(link)
    joints = tuple(model.joints[i] for i in lower_idx)
    frames = {name: fr for name, fr in model.frames.items()
              if fr.link in keep_links and name in
              ("torso", model.feet.left, model.feet.right)}
    groups = {g: model.groups[g] for g in ("left_leg", "right_leg", "waist")}
    reduced = RobotModel(root_link=model.root_link, links=tuple(links),
                         joints=joints, groups=groups, frames=frames,
                         feet=model.feet)
    reduced._finalize()
    return reduced


def _com_only(model: RobotModel, res) -> np.ndarray:
    """CoM point from an existing single-pose FK result."""
    com_rel = res.link_pos_rel + np.einsum("lij,lj->li", res.link_rot, model.link_com)
    return res.base_position + (model.link_mass @ com_rel) / model.total_mass


def _batch_rotation_rows(W: np.ndarray, R: np.ndarray) -> np.ndarray:
    """d vec(R)/d var for angular columns W (m, 3, nv) -> (m, 9, nv)."""
    m, _, nv = W.shape
    # C[b, v, j, :] = w_v x R[:, j]
    C = np.cross(W.transpose(0, 2, 1)[:, :, None, :], R.transpose(0, 2, 1)[:, None, :, :])
    return C.transpose(0, 3, 2, 1).reshape(m, 9, nv)


class _LowerCost:
    """Cost terms over the reduced model, evaluated for whole state batches.

    pose = x[:21] = [base position, base rpy, lower joints]; residual layout:
    CoM (3), torso rotation (9), height (1), two feet (12 each), polygon
    barrier (1), joint-limit hinges (15) -> 53 rows.
    """

    N_RES = 53

    def __init__(self, reduced: RobotModel, command: WbcCommand,
                 weights: CostWeights, x_ref: np.ndarray,
                 foot_targets: dict, polygon, c_ref: np.ndarray):
        self.red = reduced
        self.w = weights
        self.x_ref = x_ref
        self.R_ref = rpy_to_matrix(command.rpy)
        self.h_cmd = float(command.height)
        self.foot_targets = foot_targets  # name -> (p0, R0)
        self.poly_normals = polygon.normals
        self.poly_offsets = polygon.offsets
        self.c_ref = c_ref
        self.sq_com = np.sqrt(np.asarray(weights.q_com, dtype=float))
        self.sq_torso = np.sqrt(weights.q_torso)
        self.sq_h = np.sqrt(weights.w_height)
        self.sq_feet = np.sqrt(weights.w_feet)
        self.sq_poly = np.sqrt(weights.w_polygon)
        self.sq_lim = np.sqrt(weights.w_limits)
        self.lo = reduced.limits_lower + weights.limit_margin
        self.hi = reduced.limits_upper - weights.limit_margin
        self.foot_names = (reduced.feet.left, reduced.feet.right)
        # static per-frame ancestor joint sets
        self._frame_link = {n: reduced.link_index[reduced.frames[n].link]
                            for n in ("torso", *self.foot_names)}
        self._frame_joints = {n: np.where(reduced.ancestor_joints_of_link[li])[0]
                              for n, li in self._frame_link.items()}
        desc = reduced.ancestor_joints_of_link.T  # (nj, nl)
        self._m_sub = desc @ reduced.link_mass
        self._desc = desc

    def _fk(self, poses: np.ndarray) -> BatchFk:
        return fk_batch(self.red, poses[:, 0:3], poses[:, 3:6], poses[:, 6:NPOSE])

    def _com(self, bfk: BatchFk) -> np.ndarray:
        # Caches feed the Jacobian assembly of the same batch; a _LowerCost
        # instance belongs to exactly one (single-threaded) solve.
        red = self.red
        com_rel = bfk.link_pos_rel + np.einsum("mlij,lj->mli", bfk.link_rot, red.link_com)
        self._com_rel_links = com_rel
        self._c_cache = bfk.base_position + np.einsum(
            "l,mli->mi", red.link_mass, com_rel) / red.total_mass
        return self._c_cache

    def residual_values(self, poses: np.ndarray, bfk: BatchFk | None = None,
                        out: np.ndarray | None = None) -> np.ndarray:
        """Residual stack (m, 53) at the given poses."""
        m = poses.shape[0]
        if bfk is None:
            bfk = self._fk(poses)
        r = out if out is not None else np.zeros((m, self.N_RES))
        c = self._com(bfk)
        r[:, 0:3] = self.sq_com * (c - self.c_ref)
        _, R_t = bfk.frame(self.red, "torso")
        r[:, 3:12] = self.sq_torso * (R_t - self.R_ref).reshape(m, 9)
        r[:, 12] = self.sq_h * (poses[:, 2] - self.h_cmd)
        col = 13
        for name in self.foot_names:
            p0, R0 = self.foot_targets[name]
            p_f, R_f = bfk.frame(self.red, name)
            r[:, col:col + 3] = self.sq_feet * (p_f - p0)
            r[:, col + 3:col + 12] = self.sq_feet * (R_f - R0).reshape(m, 9)
            col += 12
        margins = np.min(c[:, :2] @ self.poly_normals.T + self.poly_offsets, axis=1)
        r[:, col] = self.sq_poly * np.maximum(0.0, self.w.polygon_margin_min - margins)
        q = poses[:, 6:NPOSE]
        r[:, col + 1:] = self.sq_lim * (np.maximum(0.0, q - self.hi)
                                        + np.maximum(0.0, self.lo - q))
        return r

    def residuals_and_jac(self, poses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Residuals (m, 53) and Jacobians (m, 53, 21) wrt the pose block."""
        m = poses.shape[0]
        red = self.red
        bfk = self._fk(poses)
        r = self.residual_values(poses, bfk=bfk)
        J = np.zeros((m, self.N_RES, NPOSE))
        E = rpy_rate_matrix_batch(poses[:, 3:6])
        base_pos = bfk.base_position
        jpos_w = base_pos[:, None, :] + bfk.joint_pos_rel

        def point_jac(p, link_joints):
            """Linear (m,3,21) and angular (m,3,21) pose-variable Jacobians
            of points p (m,3) on a link with the given ancestor joints."""
            Jl = np.zeros((m, 3, NPOSE))
            Ja = np.zeros((m, 3, NPOSE))
            Jl[:, 0, 0] = Jl[:, 1, 1] = Jl[:, 2, 2] = 1.0
            rvec = p - base_pos
            # -skew(r) @ E: rotation about base expressed in rpy rates
            sk = np.zeros((m, 3, 3))
            sk[:, 0, 1] = rvec[:, 2]
            sk[:, 0, 2] = -rvec[:, 1]
            sk[:, 1, 0] = -rvec[:, 2]
            sk[:, 1, 2] = rvec[:, 0]
            sk[:, 2, 0] = rvec[:, 1]
            sk[:, 2, 1] = -rvec[:, 0]
            Jl[:, :, 3:6] = sk @ E
            Ja[:, :, 3:6] = E
            if link_joints.size:
                axes = bfk.joint_axis_world[:, link_joints]
                arm = p[:, None, :] - jpos_w[:, link_joints]
                Jl[:, :, 6 + link_joints] = np.cross(axes, arm).transpose(0, 2, 1)
                Ja[:, :, 6 + link_joints] = axes.transpose(0, 2, 1)
            return Jl, Ja

        # CoM
        c = self._c_cache
        com_w = base_pos[:, None, :] + self._com_rel_links
        S = np.einsum("jl,mli->mji", self._desc, red.link_mass[:, None] * com_w)
        arm = S - self._m_sub[None, :, None] * jpos_w
        Jc = np.zeros((m, 3, NPOSE))
        Jc[:, 0, 0] = Jc[:, 1, 1] = Jc[:, 2, 2] = 1.0
        rvec = c - base_pos
        sk = np.zeros((m, 3, 3))
        sk[:, 0, 1] = rvec[:, 2]
        sk[:, 0, 2] = -rvec[:, 1]
        sk[:, 1, 0] = -rvec[:, 2]
        sk[:, 1, 2] = rvec[:, 0]
        sk[:, 2, 0] = rvec[:, 1]
        sk[:, 2, 1] = -rvec[:, 0]
        Jc[:, :, 3:6] = sk @ E
        Jc[:, :, 6:] = (np.cross(bfk.joint_axis_world, arm)
                        / red.total_mass).transpose(0, 2, 1)
        J[:, 0:3] = self.sq_com[None, :, None] * Jc

        # torso rotation
        p_t, R_t = bfk.frame(red, "torso")
        _, Ja_t = point_jac(p_t, self._frame_joints["torso"])
        J[:, 3:12] = self.sq_torso * _batch_rotation_rows(Ja_t, R_t)

        J[:, 12, 2] = self.sq_h

        col = 13
        for name in self.foot_names:
            p_f, R_f = bfk.frame(red, name)
            Jl_f, Ja_f = point_jac(p_f, self._frame_joints[name])
            J[:, col:col + 3] = self.sq_feet * Jl_f
            J[:, col + 3:col + 12] = self.sq_feet * _batch_rotation_rows(Ja_f, R_f)
            col += 12

        # polygon barrier: gradient through the most-violated edge
        margins = c[:, :2] @ self.poly_normals.T + self.poly_offsets
        e = np.argmin(margins, axis=1)
        active = r[:, col] > 0
        if active.any():
            n_e = self.poly_normals[e[active]]  # (ma, 2)
            J[active, col] = -self.sq_poly * np.einsum(
                "bi,bij->bj", n_e, Jc[active][:, :2, :])

        # limit hinges
        q = poses[:, 6:NPOSE]
        sign = (q > self.hi).astype(float) - (q < self.lo).astype(float)
        idx = np.arange(15)
        J[:, col + 1 + idx, 6 + idx] = self.sq_lim * sign
        return r, J


@dataclass
class WbcProblem:
    """The assembled optimal-control problem plus everything needed to
    interpret its solution."""

    oc: boxddp.OcProblem
    x0: np.ndarray
    reduced: RobotModel
    cost_terms: _LowerCost
    config: WbcConfig
    command: WbcCommand
    weights: CostWeights
    stance_base: BasePose


def build_problem(model: RobotModel, q_upper: np.ndarray, command: WbcCommand,
                  weights: CostWeights | None = None,
                  config: WbcConfig | None = None) -> WbcProblem:
    """Assemble the reference-pose problem for one (q_upper, command) pair.

    Raises FootContactError if the initial stance is not in double support.
    """
    weights = weights or CostWeights()
    config = config or WbcConfig()
    q_upper = np.asarray(q_upper, dtype=float)
    if q_upper.shape != (len(model.upper_indices()),):
        raise ValueError("q_upper has wrong dimension")

    base0 = standing_base_pose(model)
    q_full = np.zeros(model.nq)
    q_full[model.upper_indices()] = q_upper
    poly = support_polygon(model, base0, q_full)  # double-support precondition
    c_ref3 = np.zeros(3)
    c_ref3[:2] = polygon_centroid(poly.vertices)

    reduced = reduce_to_lower(model, q_upper)
    res0 = fk(reduced, base0, np.zeros(15))
    foot_targets = {name: res0.frames[name]
                    for name in (reduced.feet.left, reduced.feet.right)}

    x_ref = np.zeros(NX)
    x_ref[0:3] = base0.position
    # Regularize toward the command-continuous seed pose rather than the
    # stance: solutions then form one canonical, smooth family over the
    # command space, which the adaptation network has to imitate.
    x_ref[:NPOSE] = _seed_pose(reduced, command, base0)
    terms = _LowerCost(reduced, command, weights, x_ref, foot_targets,
                       poly, c_ref3)

    dt = config.dt
    fx = np.eye(NX)
    fx[:NPOSE, NPOSE:] = dt * np.eye(NPOSE)
    fu = np.vstack([dt * dt * np.eye(NPOSE), dt * np.eye(NPOSE)])
    luu_const = 2.0 * weights.r_control * np.eye(NU)
    lux_const = np.zeros((NU, NX))

    qs = weights.q_state
    rc = weights.r_control
    ts = weights.terminal_scale
    wtv = weights.w_terminal_vel

    def dynamics(k, x, u):
        out = x.copy()
        out[NPOSE:] += dt * u
        out[:NPOSE] += dt * out[NPOSE:]
        return out

    def dynamics_derivs(k, x, u):
        return fx, fu

    def cost_batch(xs, us):
        r = terms.residual_values(xs[:, :NPOSE])
        dx = xs - x_ref
        return (np.einsum("mr,mr->m", r, r) + qs * np.einsum("mi,mi->m", dx, dx)
                + rc * np.einsum("mi,mi->m", us, us))

    def cost_derivs_batch(xs, us):
        m = xs.shape[0]
        r, J = terms.residuals_and_jac(xs[:, :NPOSE])
        lx = 2.0 * qs * (xs - x_ref)
        lx[:, :NPOSE] += 2.0 * np.einsum("mri,mr->mi", J, r)
        lxx = np.zeros((m, NX, NX))
        lxx[:, :NPOSE, :NPOSE] = 2.0 * np.einsum("mri,mrj->mij", J, J)
        lxx[:, np.arange(NX), np.arange(NX)] += 2.0 * qs
        lu = 2.0 * rc * us
        return (lx, lu, lxx,
                np.broadcast_to(luu_const, (m, NU, NU)),
                np.broadcast_to(lux_const, (m, NU, NX)))

    def cost(k, x, u):
        return float(cost_batch(x[None, :], u[None, :])[0])

    def cost_derivs(k, x, u):
        lx, lu, lxx, luu, lux = cost_derivs_batch(x[None, :], u[None, :])
        return lx[0], lu[0], lxx[0], luu[0], lux[0]

    def terminal_cost(x):
        r = terms.residual_values(x[None, :NPOSE])[0]
        v = x[NPOSE:]
        return float(ts * (r @ r) + wtv * v @ v)

    def terminal_derivs(x):
        r, J = terms.residuals_and_jac(x[None, :NPOSE])
        r, J = r[0], J[0]
        lx = np.zeros(NX)
        lx[:NPOSE] = 2.0 * ts * (J.T @ r)
        lx[NPOSE:] = 2.0 * wtv * x[NPOSE:]
        lxx = np.zeros((NX, NX))
        lxx[:NPOSE, :NPOSE] = 2.0 * ts * (J.T @ J)
        lxx[NPOSE:, NPOSE:] = 2.0 * wtv * np.eye(NPOSE)
        return lx, lxx

    def dynamics_batch(xs, us):
        out = xs.copy()
        out[:, NPOSE:] += dt * us
        out[:, :NPOSE] += dt * out[:, NPOSE:]
        return out

    oc = boxddp.OcProblem(
        nx=NX, nu=NU, horizon=config.horizon,
        dynamics=dynamics, dynamics_derivs=dynamics_derivs,
        cost=cost, cost_derivs=cost_derivs,
        terminal_cost=terminal_cost, terminal_derivs=terminal_derivs,
        u_min=-config.u_bound * np.ones(NU), u_max=config.u_bound * np.ones(NU),
        cost_batch=cost_batch, cost_derivs_batch=cost_derivs_batch,
        dynamics_batch=dynamics_batch,
    )
    x0 = x_ref.copy()
    return WbcProblem(oc=oc, x0=x0, reduced=reduced, cost_terms=terms,
                      config=config, command=command, weights=weights,
                      stance_base=base0)


def _seed_pose(reduced: RobotModel, command: WbcCommand, base0: BasePose) -> np.ndarray:
    """Closed-form approximate pose for a (rpy, h) command.

    Symmetric squat from the 2-link leg geometry, waist takes as much of the
    orientation command as its limits allow and the base (via hip
    counter-rotation, feet kept flat) takes the excess. Only used to seed the
    solver in the right basin; the optimizer owns the fine geometry.
    """
    left = [reduced.joint_index[n] for n in reduced.groups["left_leg"]]
    right = [reduced.joint_index[n] for n in reduced.groups["right_leg"]]
    waist = [reduced.joint_index[n] for n in reduced.groups["waist"]]
    thigh = float(np.linalg.norm(reduced.joint_origin_xyz[left[3]]))
    shank = float(np.linalg.norm(reduced.joint_origin_xyz[left[4]]))
    span = thigh + shank
    h0 = float(base0.position[2])

    v = span - (h0 - command.height)
    v = min(span, max(0.2 * span, v))
    knee = 2.0 * np.arccos(min(1.0, v / span))

    def split(cmd, j):
        lo = reduced.limits_lower[j] + 0.06
        hi = reduced.limits_upper[j] - 0.06
        w = min(hi, max(lo, cmd))
        return w, cmd - w

    w_yaw, base_yaw = split(command.rpy[2], waist[0])
    w_roll, base_roll = split(command.rpy[0], waist[1])
    w_pitch, base_pitch = split(command.rpy[1], waist[2])

    pose = np.zeros(NPOSE)
    pose[0:3] = [0.0, 0.0, command.height]
    pose[3:6] = [base_roll, base_pitch, base_yaw]
    for leg in (left, right):
        pose[6 + leg[0]] = -knee / 2.0 - base_pitch  # hip pitch
        pose[6 + leg[1]] = -base_roll  # hip roll
        pose[6 + leg[2]] = -base_yaw  # hip yaw
        pose[6 + leg[3]] = knee
        pose[6 + leg[4]] = -knee / 2.0  # ankle pitch
    pose[6 + waist[0]] = w_yaw
    pose[6 + waist[1]] = w_roll
    pose[6 + waist[2]] = w_pitch
    lo = reduced.limits_lower + 0.02
    hi = reduced.limits_upper - 0.02
    pose[6:] = np.clip(pose[6:], lo, hi)
    return pose


def _warm_start(wp: WbcProblem) -> boxddp.Trajectory:
    """Linear interpolation from the stance to the seed pose; dynamics gaps
    are left open for the solver to contract."""
    N = wp.config.horizon
    seed = _seed_pose(wp.reduced, wp.command, wp.stance_base)
    xs = np.zeros((N + 1, NX))
    s = np.linspace(0.0, 1.0, N + 1)[:, None]
    poses = (1 - s) * wp.x0[None, :NPOSE] + s * seed[None, :]
    xs[:, :NPOSE] = poses
    xs[:-1, NPOSE:] = (poses[1:] - poses[:-1]) / wp.config.dt
    xs[0] = wp.x0
    return boxddp.Trajectory(states=xs, controls=np.zeros((N, NU)),
                             stats=boxddp.SolveStats())


@dataclass
class ReferenceStats:
    iterations: int
    final_cost: float
    res_rpy: float  # geodesic angle between achieved and commanded torso R
    res_h: float
    com_margin: float
    converged: bool
    accepted: bool
    reject_reason: str = ""


def solve_reference(model: RobotModel, q_upper: np.ndarray, command: WbcCommand,
                    weights: CostWeights | None = None,
                    config: WbcConfig | None = None,
                    ) -> tuple[np.ndarray, ReferenceStats]:
    """Solve for the 15-dim lower-body reference pose of one command.

    Deterministic per (q_upper, command, weights, config). The returned pose
    is the lower-joint block of the terminal state; `accepted` is False when
    the solver did not converge or any feasibility post-check fails (joint
    limits, foot pinning within tolerance, CoM margin >= 0).
    """
    wp = build_problem(model, q_upper, command, weights, config)
    cfg = wp.config
    options = boxddp.SolverOptions(max_iterations=cfg.max_iterations,
                                   tol_cost=cfg.tol_cost)
    traj = boxddp.solve(wp.oc, wp.x0, warm_start=_warm_start(wp), options=options)
    xN = traj.states[-1]
    q_low = xN[6:NPOSE].copy()
    pose_base = BasePose(xN[0:3], xN[3:6])

    res = fk(wp.reduced, pose_base, q_low)
    _, R_t = res.frames["torso"]
    res_rpy = rotation_angle(R_t, wp.cost_terms.R_ref)
    res_h = abs(float(xN[2]) - command.height)
    c = _com_only(wp.reduced, res)
    margin = float(np.min(wp.cost_terms.poly_normals @ c[:2]
                          + wp.cost_terms.poly_offsets))

    reason = ""
    if not traj.stats.converged:
        reason = "solver did not converge"
    elif np.any(q_low < wp.reduced.limits_lower) or np.any(q_low > wp.reduced.limits_upper):
        reason = "joint limits violated"
    elif margin < 0:
        reason = "CoM left the support polygon"
    else:
        for name in (wp.reduced.feet.left, wp.reduced.feet.right):
            p0, R0 = wp.cost_terms.foot_targets[name]
            p_f, R_f = res.frames[name]
            if np.linalg.norm(p_f - p0) > cfg.foot_tol_pos:
                reason = f"foot '{name}' drifted {np.linalg.norm(p_f - p0):.4f} m"
                break
            if rotation_angle(R_f, R0) > cfg.foot_tol_rot:
                reason = f"foot '{name}' tilted"
                break

    stats = ReferenceStats(
        iterations=traj.stats.iterations, final_cost=traj.stats.final_cost,
        res_rpy=res_rpy, res_h=res_h, com_margin=margin,
        converged=traj.stats.converged, accepted=(reason == ""),
        reject_reason=reason)
    return q_low, stats


def base_from_feet(model: RobotModel, q: np.ndarray) -> BasePose:
    """Reconstruct the base pose that puts both feet back on their default
    ground poses, by a rigid Procrustes fit over the 8 patch corners.

    This is the canonical way to recover the floating base from a stored
    joint vector (datasets persist joints only).
    """
    base0 = standing_base_pose(model)
    target = foot_corners_world(model, fk(model, base0, np.zeros(model.nq)))
    current = foot_corners_world(model, fk(model, BasePose.identity(), q))
    mu_t = target.mean(axis=0)
    mu_c = current.mean(axis=0)
    H = (current - mu_c).T @ (target - mu_t)
    U, _, Vt = np.linalg.svd(H)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T))])
    R = Vt.T @ D @ U.T
    t = mu_t - R @ mu_c
    from .geometry import matrix_to_rpy

    return BasePose(position=t, rpy=matrix_to_rpy(R))


def achieved_torso(model: RobotModel, q_upper: np.ndarray,
                   q_lower: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Foot-anchored FK evaluation of a stored reference pose.

    Returns (torso rpy, base height, CoM margin); used by dataset validation
    and by the tracking/workspace evaluation loop.
    """
    q = np.zeros(model.nq)
    q[model.upper_indices()] = q_upper
    q[model.lower_indices()] = q_lower
    base = base_from_feet(model, q)
    res = fk(model, base, q)
    _, R_t = res.frames["torso"]
    from .geometry import matrix_to_rpy

    c = _com_only(model, res)
    poly = support_polygon(model, standing_base_pose(model), np.zeros(model.nq))
    return matrix_to_rpy(R_t), float(base.position[2]), poly.margin(c[:2])
