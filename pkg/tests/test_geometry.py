import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivescope.sim.geometry import (SE2, boxes_overlap, dist_points_to_segment,
                                     oriented_box_corners, point_at_arclength,
                                     polyline_arclength, project_to_polyline,
                                     resample_polyline, segments_intersect,
                                     wrap_angle)


def test_wrap_angle_range():
    for a in (-10.0, -math.pi, 0.0, math.pi, 10.0, 123.456):
        w = float(wrap_angle(a))
        assert -math.pi < w <= math.pi
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-12)
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-3, 3),
       st.floats(-20, 20), st.floats(-20, 20))
@settings(max_examples=50, deadline=None)
def test_se2_roundtrip(x, y, yaw, px, py):
    pose = SE2(x, y, yaw)
    p = np.array([[px, py]])
    back = pose.inverse_apply(pose.apply(p))
    assert np.allclose(back, p, atol=1e-9)


def test_se2_compose_inverse():
    a = SE2(1.0, 2.0, 0.3)
    b = SE2(-4.0, 0.5, -1.2)
    ab = a.compose(b)
    p = np.array([[3.0, -1.0]])
    assert np.allclose(ab.apply(p), a.apply(b.apply(p)), atol=1e-12)
    ident = a.compose(a.inverse())
    assert np.allclose([ident.x, ident.y, ident.yaw], [0, 0, 0], atol=1e-12)


def test_resample_spacing_exact_along_arclength():
    # spacing is exact in the arclength parameter of the source polyline
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]])
    out = resample_polyline(pts, 1.0)
    assert len(out) == 21
    gaps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    # straight stretches: exactly 1; the corner chord may be marginally shorter
    assert gaps.max() <= 1.0 + 1e-9
    assert gaps.min() >= 0.7
    assert np.allclose(out[0], pts[0])


def test_project_to_polyline():
    pts = np.array([[0.0, 0.0], [10.0, 0.0]])
    s, lat, _ = project_to_polyline(pts, (3.0, 4.0))
    assert math.isclose(s, 3.0, abs_tol=1e-9)
    assert math.isclose(lat, 4.0, abs_tol=1e-9)
    s, lat, _ = project_to_polyline(pts, (-5.0, 0.0))
    assert s == 0.0 and math.isclose(lat, 5.0)


def test_point_at_arclength():
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 5.0]])
    assert np.allclose(point_at_arclength(pts, 12.0), [10.0, 2.0])
    assert np.allclose(point_at_arclength(pts, 99.0), [10.0, 5.0])


def test_segments_intersect():
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))
    assert segments_intersect((0, 0), (2, 0), (1, 0), (1, 5))  # touching


def test_boxes_overlap():
    a = oriented_box_corners(0, 0, 0.0, 4, 2)
    b = oriented_box_corners(3, 0, 0.0, 4, 2)
    c = oriented_box_corners(10, 0, 0.7, 4, 2)
    assert boxes_overlap(a, b)
    assert not boxes_overlap(a, c)
    d = oriented_box_corners(2.9, 0, math.pi / 4, 4, 2)
    assert boxes_overlap(a, d)


def test_dist_points_to_segment():
    pts = np.array([[0.0, 1.0], [5.0, 3.0], [-2.0, 0.0]])
    d = dist_points_to_segment(pts, (0, 0), (4, 0))
    assert np.allclose(d, [1.0, np.hypot(1, 3), 2.0])


def test_arclength_monotone():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    s = polyline_arclength(pts)
    assert np.all(np.diff(s) > 0)
    assert math.isclose(s[-1], 3.0)
