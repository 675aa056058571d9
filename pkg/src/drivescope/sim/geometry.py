"""2D geometry helpers: SE(2) poses, polylines, oriented boxes.

All coordinates in meters, angles in radians. Polylines are (N, 2) float
arrays ordered by arclength.
"""
from __future__ import annotations

import math

import numpy as np


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


class SE2:
    """Rigid transform in the plane: x' = R(yaw) x + t."""

    __slots__ = ("x", "y", "yaw")

    def __init__(self, x: float, y: float, yaw: float):
        self.x = float(x)
        self.y = float(y)
        self.yaw = float(yaw)

    def apply(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rot = np.array([[c, -s], [s, c]])
        return pts @ rot.T + np.array([self.x, self.y])

    def inverse_apply(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        shifted = pts - np.array([self.x, self.y])
        rot = np.array([[c, s], [-s, c]])
        return shifted @ rot.T

    def compose(self, other: "SE2") -> "SE2":
        px, py = self.apply([[other.x, other.y]])[0]
        return SE2(px, py, wrap_angle(self.yaw + other.yaw))

    def inverse(self) -> "SE2":
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return SE2(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.yaw)

    def as_tuple(self):
        return (self.x, self.y, self.yaw)

    def __repr__(self):
        return f"SE2(x={self.x:.3f}, y={self.y:.3f}, yaw={self.yaw:.4f})"


def relative_pose(frm: SE2, to: SE2) -> SE2:
    """Pose of `to` expressed in the frame of `frm`."""
    return frm.inverse().compose(to)


def polyline_arclength(pts) -> np.ndarray:
    """Cumulative arclength, starting at 0."""
    pts = np.asarray(pts, dtype=np.float64)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def resample_polyline(pts, spacing: float) -> np.ndarray:
    """Resample at exact `spacing` along arclength; drops any sub-spacing tail."""
    pts = np.asarray(pts, dtype=np.float64)
    s = polyline_arclength(pts)
    total = s[-1]
    n = int(math.floor(total / spacing + 1e-9))
    targets = np.arange(n + 1) * spacing
    x = np.interp(targets, s, pts[:, 0])
    y = np.interp(targets, s, pts[:, 1])
    return np.stack([x, y], axis=1)


def project_to_polyline(pts, point):
    """Project `point` onto a polyline.

    Returns (arclength, lateral_distance, segment_index).
    """
    pts = np.asarray(pts, dtype=np.float64)
    p = np.asarray(point, dtype=np.float64)
    a = pts[:-1]
    b = pts[1:]
    ab = b - a
    seg_len2 = np.einsum("ij,ij->i", ab, ab)
    seg_len2 = np.where(seg_len2 < 1e-12, 1e-12, seg_len2)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / seg_len2, 0.0, 1.0)
    proj = a + t[:, None] * ab
    d2 = np.einsum("ij,ij->i", proj - p, proj - p)
    i = int(np.argmin(d2))
    s = polyline_arclength(pts)
    return s[i] + t[i] * math.sqrt(seg_len2[i]), math.sqrt(d2[i]), i


def point_at_arclength(pts, s: float) -> np.ndarray:
    """Point on polyline at arclength s (clamped to ends)."""
    pts = np.asarray(pts, dtype=np.float64)
    cs = polyline_arclength(pts)
    s = min(max(s, 0.0), cs[-1])
    x = np.interp(s, cs, pts[:, 0])
    y = np.interp(s, cs, pts[:, 1])
    return np.array([x, y])


def heading_at_arclength(pts, s: float) -> float:
    pts = np.asarray(pts, dtype=np.float64)
    cs = polyline_arclength(pts)
    s = min(max(s, 0.0), cs[-1])
    i = int(np.searchsorted(cs, s, side="right")) - 1
    i = min(max(i, 0), len(pts) - 2)
    d = pts[i + 1] - pts[i]
    return math.atan2(d[1], d[0])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of segments p1p2 and q1q2."""
    p1, p2, q1, q2 = (np.asarray(v, dtype=np.float64) for v in (p1, p2, q1, q2))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True

    def on_seg(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    if d1 == 0 and on_seg(q1, q2, p1):
        return True
    if d2 == 0 and on_seg(q1, q2, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, q1):
        return True
    if d4 == 0 and on_seg(p1, p2, q2):
        return True
    return False


def oriented_box_corners(cx, cy, yaw, length, width) -> np.ndarray:
    """Corners of an oriented rectangle, CCW, (4, 2)."""
    c, s = math.cos(yaw), math.sin(yaw)
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def boxes_overlap(c1, c2) -> bool:
    """Separating-axis test for two convex quads given as (4, 2) corner arrays."""
    for corners in (c1, c2):
        for i in range(4):
            edge = corners[(i + 1) % 4] - corners[i]
            axis = np.array([-edge[1], edge[0]])
            p1 = c1 @ axis
            p2 = c2 @ axis
            if p1.max() < p2.min() or p2.max() < p1.min():
                return False
    return True


def dist_points_to_segment(points, a, b) -> np.ndarray:
    """Distance from each point in `points` (N, 2) to segment ab."""
    points = np.asarray(points, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    len2 = float(ab @ ab)
    if len2 < 1e-12:
        return np.linalg.norm(points - a, axis=-1)
    t = np.clip((points - a) @ ab / len2, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(points - proj, axis=-1)
