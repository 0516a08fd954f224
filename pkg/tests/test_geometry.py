import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from wbopt import geometry as geo

angles = st.floats(-3.1, 3.1, allow_nan=False)


@given(r=angles, p=st.floats(-1.5, 1.5), y=angles)
def test_rpy_roundtrip(r, p, y):
    R = geo.rpy_to_matrix(np.array([r, p, y]))
    assert np.linalg.norm(R.T @ R - np.eye(3)) < 1e-12
    back = geo.matrix_to_rpy(R)
    assert np.allclose(geo.rpy_to_matrix(back), R, atol=1e-9)


def test_rpy_convention_is_extrinsic_xyz():
    # roll then pitch then yaw about fixed axes: R = Rz @ Ry @ Rx
    rpy = np.array([0.3, -0.4, 1.1])
    Rx = geo.axis_angle(np.array([1.0, 0, 0]), 0.3)
    Ry = geo.axis_angle(np.array([0, 1.0, 0]), -0.4)
    Rz = geo.axis_angle(np.array([0, 0, 1.0]), 1.1)
    assert np.allclose(geo.rpy_to_matrix(rpy), Rz @ Ry @ Rx, atol=1e-12)


@given(r=angles, p=st.floats(-1.4, 1.4), y=angles)
def test_rpy_rate_matrix_matches_finite_differences(r, p, y):
    rpy = np.array([r, p, y])
    E = geo.rpy_rate_matrix(rpy)
    h = 1e-7
    for i in range(3):
        d = np.zeros(3)
        d[i] = h
        Rp = geo.rpy_to_matrix(rpy + d)
        Rm = geo.rpy_to_matrix(rpy - d)
        dR = (Rp - Rm) / (2 * h)
        W = dR @ geo.rpy_to_matrix(rpy).T
        w = np.array([W[2, 1], W[0, 2], W[1, 0]])
        assert np.allclose(w, E[:, i], atol=1e-6)


def test_hull_ccw_square_and_margin():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.8]])
    hull = geo.convex_hull_ccw(pts)
    assert hull.shape == (4, 2)
    assert geo.polygon_area(hull) > 0  # ccw
    assert abs(geo.polygon_margin(hull, np.array([0.5, 0.5])) - 0.5) < 1e-12
    # vertex sits on the boundary
    assert abs(geo.polygon_margin(hull, hull[0])) < 1e-9
    # outside is negative
    assert geo.polygon_margin(hull, np.array([2.0, 0.5])) < 0


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=4, max_size=20))
def test_hull_contains_all_points(pts):
    arr = np.array(pts)
    hull = geo.convex_hull_ccw(arr)
    if hull.shape[0] < 3:
        return
    for p in arr:
        assert geo.polygon_margin(hull, p) >= -1e-9


def test_centroid_margin_beats_vertices():
    pts = np.array([[0, 0], [2, 0], [2, 1], [0, 1]])
    hull = geo.convex_hull_ccw(pts)
    centroid = hull.mean(axis=0)
    m_centroid = geo.polygon_margin(hull, centroid)
    for v in hull:
        assert m_centroid > geo.polygon_margin(hull, v)


def test_rotation_angle():
    Rz = geo.axis_angle(np.array([0, 0, 1.0]), 0.7)
    assert abs(geo.rotation_angle(np.eye(3), Rz) - 0.7) < 1e-12
    assert geo.rotation_angle(Rz, Rz) < 1e-7
