"""Privileged ground-truth BEV rasterization in the ego frame.

Grid layout: rows index forward distance x, columns index lateral y.
Channels: drivable, lane_marking, obstacle_occupancy, obstacle_heading_cos,
obstacle_heading_sin, route_overlay. Occupancy-style channels are {0, 1};
heading channels carry cos/sin of agent yaw relative to ego on occupied
cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import BevConfig
from .geometry import SE2, wrap_angle
from .world import WorldState

CH_DRIVABLE = 0
CH_MARKING = 1
CH_OCCUPANCY = 2
CH_HEAD_COS = 3
CH_HEAD_SIN = 4
CH_ROUTE = 5


@dataclass
class BevGrid:
    cells: np.ndarray                 # (H, W, C) float64
    resolution: float
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def copy(self) -> "BevGrid":
        return BevGrid(self.cells.copy(), self.resolution,
                       self.x_min, self.x_max, self.y_min, self.y_max)

    @property
    def extent(self):
        return (self.x_min, self.x_max, self.y_min, self.y_max)


_centers_cache: dict = {}


def _cell_centers(cfg: BevConfig):
    key = (cfg.x_min, cfg.y_min, cfg.resolution, cfg.height, cfg.width)
    if key not in _centers_cache:
        xs = cfg.x_min + (np.arange(cfg.height) + 0.5) * cfg.resolution
        ys = cfg.y_min + (np.arange(cfg.width) + 0.5) * cfg.resolution
        _centers_cache[key] = (xs, ys)
    return _centers_cache[key]


def _draw_polyline(channel, pts, half_thickness, cfg: BevConfig, value=1.0):
    """Mark cells within half_thickness of any segment of an ego-frame polyline."""
    xs, ys = _cell_centers(cfg)
    res = cfg.resolution
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        lo_x = min(a[0], b[0]) - half_thickness
        hi_x = max(a[0], b[0]) + half_thickness
        lo_y = min(a[1], b[1]) - half_thickness
        hi_y = max(a[1], b[1]) + half_thickness
        if hi_x < cfg.x_min or lo_x > cfg.x_max or hi_y < cfg.y_min or lo_y > cfg.y_max:
            continue
        i0 = max(int((lo_x - cfg.x_min) / res), 0)
        i1 = min(int((hi_x - cfg.x_min) / res) + 1, cfg.height)
        j0 = max(int((lo_y - cfg.y_min) / res), 0)
        j1 = min(int((hi_y - cfg.y_min) / res) + 1, cfg.width)
        if i0 >= i1 or j0 >= j1:
            continue
        cx = xs[i0:i1][:, None]
        cy = ys[j0:j1][None, :]
        ab = b - a
        len2 = float(ab @ ab)
        if len2 < 1e-12:
            d2 = (cx - a[0]) ** 2 + (cy - a[1]) ** 2
        else:
            t = np.clip(((cx - a[0]) * ab[0] + (cy - a[1]) * ab[1]) / len2, 0.0, 1.0)
            px = a[0] + t * ab[0]
            py = a[1] + t * ab[1]
            d2 = (cx - px) ** 2 + (cy - py) ** 2
        mask = d2 <= half_thickness * half_thickness
        channel[i0:i1, j0:j1][mask] = value


def _fill_oriented_box(channels, center, yaw, length, width, cfg: BevConfig, values):
    """Set `values` (list of (channel_index, value)) on cells inside the box."""
    xs, ys = _cell_centers(cfg)
    res = cfg.resolution
    radius = math.hypot(length, width) / 2.0
    lo_x, hi_x = center[0] - radius, center[0] + radius
    lo_y, hi_y = center[1] - radius, center[1] + radius
    if hi_x < cfg.x_min or lo_x > cfg.x_max or hi_y < cfg.y_min or lo_y > cfg.y_max:
        return
    i0 = max(int((lo_x - cfg.x_min) / res), 0)
    i1 = min(int((hi_x - cfg.x_min) / res) + 1, cfg.height)
    j0 = max(int((lo_y - cfg.y_min) / res), 0)
    j1 = min(int((hi_y - cfg.y_min) / res) + 1, cfg.width)
    if i0 >= i1 or j0 >= j1:
        return
    cx = xs[i0:i1][:, None] - center[0]
    cy = ys[j0:j1][None, :] - center[1]
    c, s = math.cos(yaw), math.sin(yaw)
    u = cx * c + cy * s
    v = -cx * s + cy * c
    mask = (np.abs(u) <= length / 2.0) & (np.abs(v) <= width / 2.0)
    for ch, value in values:
        channels[i0:i1, j0:j1, ch][mask] = value


def routing_window(routing, ego_pos, behind, ahead):
    """Slice of the routing polyline within [s_ego - behind, s_ego + ahead]."""
    from .geometry import polyline_arclength, project_to_polyline
    routing = np.asarray(routing, dtype=np.float64)
    s_ego, _, _ = project_to_polyline(routing, ego_pos)
    cs = polyline_arclength(routing)
    lo = int(np.searchsorted(cs, s_ego - behind))
    hi = int(np.searchsorted(cs, s_ego + ahead)) + 1
    return routing[max(lo - 1, 0):min(hi + 1, len(routing))]


def _offset_polyline(pts, offset):
    """Per-segment normal offset; adequate for marking strokes."""
    out = []
    for i in range(len(pts) - 1):
        d = pts[i + 1] - pts[i]
        n = np.array([-d[1], d[0]])
        norm = np.linalg.norm(n)
        if norm < 1e-9:
            continue
        n = n / norm * offset
        out.append((pts[i] + n, pts[i + 1] + n))
    return out


def rasterize_bev(state: WorldState, route, network, cfg: BevConfig = BevConfig()) -> BevGrid:
    """Rasterize the world around the ego into a 6-channel ego-frame grid.

    `route` may be None (route_overlay left empty) or an object with a
    `routing` (N, 2) polyline. Rotation-consistent: transforming world and
    ego by a common rigid motion leaves the grid unchanged.
    """
    ego = state.ego
    if not all(math.isfinite(v) for v in (ego.x, ego.y, ego.yaw)):
        raise ValueError("ego pose must be finite")
    pose = SE2(ego.x, ego.y, ego.yaw)
    cells = np.zeros((cfg.height, cfg.width, len(cfg.channels)), dtype=np.float64)
    reach = math.hypot(max(abs(cfg.x_min), cfg.x_max), max(abs(cfg.y_min), cfg.y_max)) + 5.0
    ego_pos = np.array([ego.x, ego.y])

    # drivable corridors and lane boundary markings
    in_intersection = network.lane_ids_in_intersections()
    for lane in network.lanes.values():
        pts = lane.centerline
        d = np.linalg.norm(pts - ego_pos, axis=1)
        if d.min() > reach:
            continue
        pts_ego = pose.inverse_apply(pts)
        _draw_polyline(cells[:, :, CH_DRIVABLE], pts_ego, lane.width / 2.0, cfg)
        if lane.id not in in_intersection:
            for a, b in _offset_polyline(pts_ego, lane.width / 2.0):
                _draw_polyline(cells[:, :, CH_MARKING], np.array([a, b]),
                               cfg.marking_thickness / 2.0, cfg)
            for a, b in _offset_polyline(pts_ego, -lane.width / 2.0):
                _draw_polyline(cells[:, :, CH_MARKING], np.array([a, b]),
                               cfg.marking_thickness / 2.0, cfg)
    for center, half in network.intersection_boxes:
        if math.hypot(center[0] - ego.x, center[1] - ego.y) > reach + half:
            continue
        c_ego = pose.inverse_apply(np.array([center]))[0]
        _fill_oriented_box(cells, c_ego, -ego.yaw, 2 * half, 2 * half, cfg,
                           [(CH_DRIVABLE, 1.0)])

    # obstacles with relative-heading channels
    for agent in state.agents:
        if math.hypot(agent.x - ego.x, agent.y - ego.y) > reach:
            continue
        c_ego = pose.inverse_apply(np.array([[agent.x, agent.y]]))[0]
        rel_yaw = float(wrap_angle(agent.yaw - ego.yaw))
        _fill_oriented_box(cells, c_ego, rel_yaw, agent.length, agent.width, cfg,
                           [(CH_OCCUPANCY, 1.0),
                            (CH_HEAD_COS, math.cos(rel_yaw)),
                            (CH_HEAD_SIN, math.sin(rel_yaw))])

    # route overlay: only the near-field window around the ego's progress
    if route is not None and getattr(route, "routing", None) is not None:
        routing = np.asarray(route.routing, dtype=np.float64)
        window = routing_window(routing, ego_pos, cfg.route_overlay_behind,
                                cfg.route_overlay_ahead)
        if len(window) >= 2:
            pts_ego = pose.inverse_apply(window)
            _draw_polyline(cells[:, :, CH_ROUTE], pts_ego, cfg.route_thickness / 2.0, cfg)

    return BevGrid(cells=cells, resolution=cfg.resolution,
                   x_min=cfg.x_min, x_max=cfg.x_max, y_min=cfg.y_min, y_max=cfg.y_max)
