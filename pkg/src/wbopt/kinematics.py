"""Forward kinematics, frame Jacobians, center of mass and support polygon.

All operations are pure functions of (model, base, q); configuration vectors
``q`` follow the model's joint order. Jacobians are 6x(6+n) (or 3x(6+n) for
the CoM) with rows [linear; angular] and columns [base linear velocity, base
angular velocity, joint rates], everything expressed in the world frame with
the base twist taken at the base-link origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    axis_angles_batch,
    convex_hull_ccw,
    polygon_area,
    polygon_edge_normals,
    polygon_margin,
    rpy_to_matrix,
    rpy_to_matrix_batch,
)
from .model import BasePose, RobotModel


class UnknownFrameError(KeyError):
    pass


class FootContactError(RuntimeError):
    """Raised when the double-support assumption does not hold."""


@dataclass
class FkResult:
    """World poses of every link and every named frame.

    Positions are accumulated relative to the base origin and shifted once at
    the end, which makes every pose (and the CoM) exactly translation
    equivariant in floating point.
    """

    base_position: np.ndarray
    link_pos: np.ndarray  # (n_links, 3)
    link_pos_rel: np.ndarray  # (n_links, 3), relative to the base origin
    link_rot: np.ndarray  # (n_links, 3, 3)
    frames: dict[str, tuple[np.ndarray, np.ndarray]]
    joint_pos: np.ndarray  # (n_joints, 3) world position of each joint origin
    joint_axis_world: np.ndarray  # (n_joints, 3)

    def frame(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        try:
            return self.frames[name]
        except KeyError:
            raise UnknownFrameError(name) from None


def fk(model: RobotModel, base: BasePose, q: np.ndarray, *,
       check_limits: bool = False) -> FkResult:
    """Compose parent transforms in tree order.

    ``check_limits=False`` (evaluation mode) tolerates out-of-limit q.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (model.nq,):
        raise ValueError(f"expected q of dim {model.nq}, got {q.shape}")
    if check_limits:
        bad = np.where((q < model.limits_lower) | (q > model.limits_upper))[0]
        if bad.size:
            names = [model.joints[i].name for i in bad]
            raise ValueError(f"q violates joint limits: {names}")

    nl, nj = len(model.links), model.nq
    base_position = np.asarray(base.position, dtype=float)
    rel = np.zeros((nl, 3))
    link_rot = np.zeros((nl, 3, 3))
    root = model.link_index[model.root_link]
    link_rot[root] = rpy_to_matrix(base.rpy)

    local_rot = axis_angles_batch(model.joint_axis, q)
    joint_rel = np.zeros((nj, 3))
    joint_axis_world = np.zeros((nj, 3))
    for j in model.joint_topo_order:
        pl = model.joint_parent_link[j]
        cl = model.joint_child_link[j]
        Rp = link_rot[pl]
        pj = rel[pl] + Rp @ model.joint_origin_xyz[j]
        Rj = Rp @ model.joint_origin_rot[j]
        joint_rel[j] = pj
        joint_axis_world[j] = Rj @ model.joint_axis[j]
        link_rot[cl] = Rj @ local_rot[j]
        rel[cl] = pj

    link_pos = base_position + rel
    frames = {}
    for name, fr in model.frames.items():
        li = model.link_index[fr.link]
        R = link_rot[li] @ rpy_to_matrix(fr.rpy)
        p = base_position + (rel[li] + link_rot[li] @ fr.xyz)
        frames[name] = (p, R)
    return FkResult(base_position=base_position, link_pos=link_pos,
                    link_pos_rel=rel, link_rot=link_rot, frames=frames,
                    joint_pos=base_position + joint_rel,
                    joint_axis_world=joint_axis_world)


@dataclass
class BatchFk:
    """FK of m configurations at once; same conventions as :class:`FkResult`.

    Frame transforms are premultiplied per batch; the joint loop runs once
    with (m, 3, 3) blocks so the python overhead amortizes over the batch.
    """

    base_position: np.ndarray  # (m, 3)
    link_pos_rel: np.ndarray  # (m, nl, 3)
    link_rot: np.ndarray  # (m, nl, 3, 3)
    joint_pos_rel: np.ndarray  # (m, nj, 3)
    joint_axis_world: np.ndarray  # (m, nj, 3)

    def frame(self, model: RobotModel, name: str) -> tuple[np.ndarray, np.ndarray]:
        """World (positions (m,3), rotations (m,3,3)) of a named frame."""
        fr = model.frames[name]
        li = model.link_index[fr.link]
        Rl = self.link_rot[:, li]
        R = Rl @ rpy_to_matrix(fr.rpy) if np.any(fr.rpy) else Rl
        p = self.base_position + self.link_pos_rel[:, li] + Rl @ fr.xyz
        return p, R


def fk_batch(model: RobotModel, base_pos: np.ndarray, base_rpy: np.ndarray,
             qs: np.ndarray) -> BatchFk:
    """Vectorized forward kinematics: m poses in one sweep."""
    m = qs.shape[0]
    nl, nj = len(model.links), model.nq
    rel = np.zeros((m, nl, 3))
    rot = np.zeros((m, nl, 3, 3))
    root = model.link_index[model.root_link]
    rot[:, root] = rpy_to_matrix_batch(np.asarray(base_rpy, dtype=float))

    axes = np.repeat(model.joint_axis[None, :, :], m, axis=0).reshape(m * nj, 3)
    local_rot = axis_angles_batch(axes, qs.reshape(m * nj)).reshape(m, nj, 3, 3)
    joint_rel = np.zeros((m, nj, 3))
    joint_axis_world = np.zeros((m, nj, 3))
    for j in model.joint_topo_order:
        pl = model.joint_parent_link[j]
        cl = model.joint_child_link[j]
        Rp = rot[:, pl]
        pj = rel[:, pl] + Rp @ model.joint_origin_xyz[j]
        Rj = Rp if model.joint_origin_identity[j] else Rp @ model.joint_origin_rot[j]
        joint_rel[:, j] = pj
        joint_axis_world[:, j] = Rj @ model.joint_axis[j]
        rot[:, cl] = Rj @ local_rot[:, j]
        rel[:, cl] = pj
    return BatchFk(base_position=np.asarray(base_pos, dtype=float),
                   link_pos_rel=rel, link_rot=rot, joint_pos_rel=joint_rel,
                   joint_axis_world=joint_axis_world)


def _point_jacobian(model: RobotModel, base: BasePose, res: FkResult,
                    point: np.ndarray, link_idx: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear and angular Jacobian blocks (each 3x(6+n)) of a point rigidly
    attached to a link."""
    n = model.nq
    Jlin = np.zeros((3, 6 + n))
    Jang = np.zeros((3, 6 + n))
    p_base = np.asarray(base.position, dtype=float)
    Jlin[:, 0:3] = np.eye(3)
    r = point - p_base
    # d p / d w  = w x r  ->  -skew(r)
    Jlin[:, 3:6] = np.array([[0, r[2], -r[1]], [-r[2], 0, r[0]], [r[1], -r[0], 0]])
    Jang[:, 3:6] = np.eye(3)
    mask = model.ancestor_joints_of_link[link_idx]
    if mask.any():
        idx = np.where(mask)[0]
        axes = res.joint_axis_world[idx]
        arm = point[None, :] - res.joint_pos[idx]
        Jlin[:, 6 + idx] = np.cross(axes, arm).T
        Jang[:, 6 + idx] = axes.T
    return Jlin, Jang


def frame_jacobian(model: RobotModel, base: BasePose, q: np.ndarray,
                   frame: str, res: FkResult | None = None) -> np.ndarray:
    """6x(6+n) world-frame Jacobian of a named frame.

    Columns for joints off the frame's ancestor path are zero.
    """
    if frame not in model.frames:
        raise UnknownFrameError(frame)
    if res is None:
        res = fk(model, base, q)
    p, _ = res.frames[frame]
    link_idx = model.link_index[model.frames[frame].link]
    Jlin, Jang = _point_jacobian(model, base, res, p, link_idx)
    return np.vstack([Jlin, Jang])


def center_of_mass(model: RobotModel, base: BasePose, q: np.ndarray,
                   res: FkResult | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Mass-weighted CoM and its 3x(6+n) Jacobian."""
    M = model.total_mass
    if M <= 0:
        raise ValueError("total mass must be positive")
    if res is None:
        res = fk(model, base, q)
    com_rel = res.link_pos_rel + np.einsum("lij,lj->li", res.link_rot, model.link_com)
    c = res.base_position + (model.link_mass @ com_rel) / M
    com_world = res.base_position + com_rel

    n = model.nq
    J = np.zeros((3, 6 + n))
    p_base = np.asarray(base.position, dtype=float)
    J[:, 0:3] = np.eye(3)
    r = c - p_base
    J[:, 3:6] = np.array([[0, r[2], -r[1]], [-r[2], 0, r[0]], [r[1], -r[0], 0]])
    # Joint j moves the mass of links below it: dc/dq_j = w_j x (S_j/M - (m_j/M) p_j)
    # with S_j, m_j the weighted CoM sum and mass of the subtree.
    desc = model.ancestor_joints_of_link.T  # (n_joints, n_links)
    m_sub = desc @ model.link_mass
    S = desc @ (model.link_mass[:, None] * com_world)
    arm = S - m_sub[:, None] * res.joint_pos
    J[:, 6:] = (np.cross(res.joint_axis_world, arm, axis=1) / M).T
    return c, J


@dataclass
class SupportPolygon:
    """Convex hull (ccw, xy meters) of both foot patches in double support."""

    vertices: np.ndarray  # (k, 2)
    normals: np.ndarray  # inward unit normals per edge
    offsets: np.ndarray

    def margin(self, point: np.ndarray) -> float:
        """Signed distance to the hull boundary; positive strictly inside."""
        p = np.asarray(point, dtype=float)[:2]
        return float(np.min(self.normals @ p + self.offsets))


def foot_corners_world(model: RobotModel, res: FkResult) -> np.ndarray:
    """World positions of the 4 patch corners of each foot, (8, 3)."""
    lx, ly = model.feet.size
    local = np.array([
        [lx / 2, ly / 2, 0], [lx / 2, -ly / 2, 0],
        [-lx / 2, -ly / 2, 0], [-lx / 2, ly / 2, 0],
    ])
    out = []
    for name in (model.feet.left, model.feet.right):
        p, R = res.frames[name]
        out.append(p[None, :] + local @ R.T)
    return np.vstack(out)


def support_polygon(model: RobotModel, base: BasePose, q: np.ndarray, *,
                    z_tol: float = 5e-3, rot_tol: float = 0.1,
                    res: FkResult | None = None) -> SupportPolygon:
    """Convex hull of the two rectangular foot patches.

    Requires both feet flat and on the ground within the given tolerances,
    otherwise :class:`FootContactError` is raised.
    """
    if model.feet is None:
        raise FootContactError("model declares no feet")
    if res is None:
        res = fk(model, base, q)
    for name in (model.feet.left, model.feet.right):
        p, R = res.frames[name]
        if abs(p[2]) > z_tol:
            raise FootContactError(
                f"foot '{name}' sole at z={p[2]:.4f} m, not on the ground")
        tilt = np.arccos(min(1.0, max(-1.0, R[2, 2])))
        if tilt > rot_tol:
            raise FootContactError(f"foot '{name}' tilted {tilt:.3f} rad")
    corners = foot_corners_world(model, res)[:, :2]
    hull = convex_hull_ccw(corners)
    if hull.shape[0] < 3 or polygon_area(hull) <= 1e-6:
        raise FootContactError("support polygon is degenerate")
    normals, offsets = polygon_edge_normals(hull)
    return SupportPolygon(vertices=hull, normals=normals, offsets=offsets)


def standing_base_pose(model: RobotModel) -> BasePose:
    """Base pose that puts the zero configuration's soles on the ground."""
    res = fk(model, BasePose.identity(), np.zeros(model.nq))
    sole_z = min(res.frames[model.feet.left][0][2], res.frames[model.feet.right][0][2])
    return BasePose(np.array([0.0, 0.0, -sole_z]), np.zeros(3))


def polygon_margin_of_point(vertices: np.ndarray, point: np.ndarray) -> float:
    return polygon_margin(vertices, point)
