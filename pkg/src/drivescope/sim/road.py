"""Road network: lanes, signalized intersections, stop signs.

Lanes are directed centerline polylines with successor/predecessor links.
The drivable area is the union of lane corridors (centerline +- width/2)
and per-intersection boxes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .geometry import dist_points_to_segment, polyline_arclength


class LightColor(IntEnum):
    RED = 0
    YELLOW = 1
    GREEN = 2


@dataclass
class Lane:
    id: str
    centerline: np.ndarray            # (N, 2) world meters, ordered by arclength
    width: float
    successors: list = field(default_factory=list)
    predecessors: list = field(default_factory=list)
    left_neighbor: str | None = None
    right_neighbor: str | None = None

    def __post_init__(self):
        self.centerline = np.asarray(self.centerline, dtype=np.float64)
        if self.width <= 0:
            raise ValueError(f"lane {self.id}: width must be positive")
        seg = np.linalg.norm(np.diff(self.centerline, axis=0), axis=1)
        if len(self.centerline) < 2 or np.any(seg <= 0):
            raise ValueError(f"lane {self.id}: centerline must be strictly ordered by arclength")

    @property
    def length(self) -> float:
        return float(polyline_arclength(self.centerline)[-1])


@dataclass
class TrafficLight:
    id: str
    stop_line: np.ndarray             # (2, 2) segment endpoints
    controlled_lane_ids: list
    phase_schedule: list              # [(LightColor, duration_s), ...], cycles
    phase_offset: float = 0.0

    def __post_init__(self):
        self.stop_line = np.asarray(self.stop_line, dtype=np.float64)
        if not self.phase_schedule:
            raise ValueError(f"light {self.id}: empty phase schedule")
        for _, dur in self.phase_schedule:
            if dur <= 0:
                raise ValueError(f"light {self.id}: phase durations must be positive")

    @property
    def cycle(self) -> float:
        return float(sum(d for _, d in self.phase_schedule))

    def color_at(self, sim_time: float) -> LightColor:
        t = (sim_time + self.phase_offset) % self.cycle
        acc = 0.0
        for color, dur in self.phase_schedule:
            acc += dur
            if t < acc:
                return LightColor(color)
        return LightColor(self.phase_schedule[-1][0])


@dataclass
class StopSign:
    id: str
    stop_line: np.ndarray
    controlled_lane_ids: list
    required_stop_duration: float = 1.0

    def __post_init__(self):
        self.stop_line = np.asarray(self.stop_line, dtype=np.float64)
        if self.required_stop_duration < 0:
            raise ValueError(f"sign {self.id}: required_stop_duration must be >= 0")


@dataclass
class RoadNetwork:
    lanes: dict                       # id -> Lane
    intersections: list = field(default_factory=list)  # lane-id groups
    intersection_boxes: list = field(default_factory=list)  # (center xy, half_size)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for lane in self.lanes.values():
            for sid in lane.successors:
                if sid not in self.lanes:
                    raise ValueError(f"lane {lane.id}: unknown successor {sid}")
                if lane.id not in self.lanes[sid].predecessors:
                    raise ValueError(f"lane link {lane.id}->{sid} not symmetric")
            for nid in (lane.left_neighbor, lane.right_neighbor):
                if nid is not None and nid not in self.lanes:
                    raise ValueError(f"lane {lane.id}: unknown neighbor {nid}")
        for group in self.intersections:
            for lid in group:
                if lid not in self.lanes:
                    raise ValueError(f"intersection references unknown lane {lid}")

    @property
    def drivable_polygons(self) -> list:
        """Corridor quads per lane segment plus intersection boxes."""
        polys = []
        for lane in self.lanes.values():
            pts = lane.centerline
            half = lane.width / 2.0
            for i in range(len(pts) - 1):
                d = pts[i + 1] - pts[i]
                n = np.array([-d[1], d[0]])
                n = n / (np.linalg.norm(n) + 1e-12) * half
                polys.append(np.array([pts[i] + n, pts[i + 1] + n,
                                       pts[i + 1] - n, pts[i] - n]))
        for center, half_size in self.intersection_boxes:
            cx, cy = center
            h = half_size
            polys.append(np.array([[cx - h, cy - h], [cx + h, cy - h],
                                   [cx + h, cy + h], [cx - h, cy + h]]))
        return polys

    def point_on_drivable(self, point) -> bool:
        p = np.asarray(point, dtype=np.float64)
        for center, half_size in self.intersection_boxes:
            if abs(p[0] - center[0]) <= half_size and abs(p[1] - center[1]) <= half_size:
                return True
        for lane in self.lanes.values():
            pts = lane.centerline
            # cheap bbox rejection before per-segment distance
            if (p[0] < pts[:, 0].min() - lane.width or p[0] > pts[:, 0].max() + lane.width
                    or p[1] < pts[:, 1].min() - lane.width or p[1] > pts[:, 1].max() + lane.width):
                continue
            half = lane.width / 2.0
            for i in range(len(pts) - 1):
                if dist_points_to_segment(p[None, :], pts[i], pts[i + 1])[0] <= half:
                    return True
        return False

    def lane_ids_in_intersections(self) -> set:
        out = set()
        for group in self.intersections:
            out.update(group)
        return out
