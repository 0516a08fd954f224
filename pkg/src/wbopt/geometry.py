"""Rotation and planar-polygon primitives shared by every solver in the repo.

Euler convention, fixed once for the whole package: ``rpy`` is extrinsic
roll-pitch-yaw about the fixed world axes x, y, z (roll applied first), i.e.
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from __future__ import annotations

import numpy as np

_EZ = np.array([0.0, 0.0, 1.0])


def skew(v: np.ndarray) -> np.ndarray:
    """3x3 cross-product matrix: skew(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rpy_to_matrix(rpy: np.ndarray) -> np.ndarray:
    """Extrinsic roll-pitch-yaw to rotation matrix, R = Rz @ Ry @ Rx."""
    r, p, y = float(rpy[0]), float(rpy[1]), float(rpy[2])
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def matrix_to_rpy(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rpy_to_matrix`; pitch folded into [-pi/2, pi/2]."""
    sp = -float(R[2, 0])
    sp = min(1.0, max(-1.0, sp))
    pitch = np.arcsin(sp)
    if abs(sp) > 1.0 - 1e-12:
        # Gimbal lock: roll/yaw degenerate, put everything into yaw.
        roll = 0.0
        yaw = np.arctan2(-R[0, 1], R[1, 1]) * np.sign(sp)
    else:
        roll = np.arctan2(R[2, 1], R[2, 2])
        yaw = np.arctan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    a = np.asarray(axis, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    K = skew(a)
    return c * np.eye(3) + s * K + (1.0 - c) * np.outer(a, a)


def axis_angles_batch(axes: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rodrigues for n (axis, angle) pairs at once -> (n, 3, 3)."""
    a = np.asarray(axes, dtype=float)
    t = np.asarray(angles, dtype=float)
    n = a.shape[0]
    c = np.cos(t)[:, None, None]
    s = np.sin(t)[:, None, None]
    K = np.zeros((n, 3, 3))
    K[:, 0, 1] = -a[:, 2]
    K[:, 0, 2] = a[:, 1]
    K[:, 1, 0] = a[:, 2]
    K[:, 1, 2] = -a[:, 0]
    K[:, 2, 0] = -a[:, 1]
    K[:, 2, 1] = a[:, 0]
    outer = a[:, :, None] * a[:, None, :]
    return c * np.eye(3)[None] + s * K + (1.0 - c) * outer


def rpy_to_matrix_batch(rpy: np.ndarray) -> np.ndarray:
    """Batched :func:`rpy_to_matrix` for rpy of shape (m, 3) -> (m, 3, 3)."""
    r, p, y = rpy[:, 0], rpy[:, 1], rpy[:, 2]
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    R = np.empty((rpy.shape[0], 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return R


def rpy_rate_matrix(rpy: np.ndarray) -> np.ndarray:
    """E(rpy) with world angular velocity w = E @ d(rpy)/dt.

    Columns follow from differentiating R = Rz(y) Ry(p) Rx(r): the roll rate
    acts about the axis Rz Ry ex, pitch about Rz ey, yaw about ez.
    """
    r, p, y = float(rpy[0]), float(rpy[1]), float(rpy[2])
    cy, sy = np.cos(y), np.sin(y)
    cp, sp = np.cos(p), np.sin(p)
    col_roll = np.array([cy * cp, sy * cp, -sp])
    col_pitch = np.array([-sy, cy, 0.0])
    return np.column_stack([col_roll, col_pitch, _EZ])


def rpy_rate_matrix_batch(rpy: np.ndarray) -> np.ndarray:
    """Batched :func:`rpy_rate_matrix`, (m, 3) -> (m, 3, 3)."""
    p, y = rpy[:, 1], rpy[:, 2]
    cy, sy = np.cos(y), np.sin(y)
    cp, sp = np.cos(p), np.sin(p)
    E = np.zeros((rpy.shape[0], 3, 3))
    E[:, 0, 0] = cy * cp
    E[:, 1, 0] = sy * cp
    E[:, 2, 0] = -sp
    E[:, 0, 1] = -sy
    E[:, 1, 1] = cy
    E[:, 2, 2] = 1.0
    return E


def rotation_angle(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle between two rotations, in radians."""
    tr = np.trace(Ra.T @ Rb)
    return float(np.arccos(min(1.0, max(-1.0, (tr - 1.0) / 2.0))))


def convex_hull_ccw(points: np.ndarray) -> np.ndarray:
    """Convex hull of 2D points, counterclockwise, via monotone chain.

    Collinear boundary points are dropped; output is deterministic for a
    given input set.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] < 3:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-1] - out[-2], p - out[-2]
                if a[0] * b[1] - a[1] * b[0] > 0:
                    break
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(vertices: np.ndarray) -> float:
    """Signed area of a polygon (positive for counterclockwise)."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    """Area centroid of a non-degenerate polygon."""
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return np.array([cx, cy])


def polygon_edge_normals(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inward unit normals n and offsets b of a ccw polygon.

    For every edge, n @ p + b is the signed distance of p to the edge line,
    positive on the interior side.
    """
    v2 = np.roll(vertices, -1, axis=0)
    edges = v2 - vertices
    lengths = np.linalg.norm(edges, axis=1)
    normals = np.column_stack([-edges[:, 1], edges[:, 0]]) / lengths[:, None]
    offsets = -np.sum(normals * vertices, axis=1)
    return normals, offsets


def polygon_margin(vertices: np.ndarray, point: np.ndarray) -> float:
    """Signed distance of a point to a ccw convex polygon boundary.

    Positive strictly inside, zero on the boundary, negative outside
    (halfplane distance, i.e. the most-violated edge).
    """
    normals, offsets = polygon_edge_normals(vertices)
    return float(np.min(normals @ np.asarray(point, dtype=float) + offsets))
