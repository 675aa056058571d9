"""Bundled road networks: a straight test road, a signalized 2x2 grid
town, and staged single-light corridors."""
from __future__ import annotations

import math

import numpy as np

from .geometry import wrap_angle
from .road import Lane, LightColor, RoadNetwork, StopSign, TrafficLight
from .scenario import Scenario

LANE_WIDTH = 3.5
LANE_OFFSET = LANE_WIDTH / 2.0
BOX_HALF = 9.0


def _line(p0, p1, spacing=5.0):
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    n = max(int(math.ceil(np.linalg.norm(p1 - p0) / spacing)), 1)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return p0 * (1 - t) + p1 * t


def _arc(center, radius, a0, a1, spacing=1.0):
    """CCW-or-CW arc from angle a0 to a1 around center."""
    span = a1 - a0
    n = max(int(math.ceil(abs(span) * radius / spacing)), 2)
    angles = a0 + span * np.linspace(0.0, 1.0, n + 1)
    return np.stack([center[0] + radius * np.cos(angles),
                     center[1] + radius * np.sin(angles)], axis=1)


def straight_map(length=400.0, two_way=False) -> Scenario:
    """Single straight eastbound lane starting at the origin."""
    lanes = {"main": Lane(id="main", centerline=_line([0.0, 0.0], [length, 0.0]),
                          width=LANE_WIDTH)}
    if two_way:
        lanes["back"] = Lane(id="back",
                             centerline=_line([length, LANE_WIDTH], [0.0, LANE_WIDTH]),
                             width=LANE_WIDTH)
    network = RoadNetwork(lanes=lanes)
    return Scenario(name="straight", network=network, ego_spawn=(2.0, 0.0, 0.0))


def light_corridor_map(light_at=60.0, length=200.0,
                       schedule=((LightColor.GREEN, 1e6),), offset=0.0) -> Scenario:
    """Straight road with one signalized stop line, for staged light tests."""
    scn = straight_map(length=length)
    line = np.array([[light_at, -LANE_OFFSET - 0.25], [light_at, LANE_OFFSET + 0.25]])
    light = TrafficLight(id="tl0", stop_line=line, controlled_lane_ids=["main"],
                         phase_schedule=[(c, d) for c, d in schedule],
                         phase_offset=offset)
    scn.lights = [light]
    scn.name = "light_corridor"
    return scn


def sign_corridor_map(sign_at=60.0, length=200.0, hold=1.0) -> Scenario:
    scn = straight_map(length=length)
    line = np.array([[sign_at, -LANE_OFFSET - 0.25], [sign_at, LANE_OFFSET + 0.25]])
    scn.signs = [StopSign(id="ss0", stop_line=line, controlled_lane_ids=["main"],
                          required_stop_duration=hold)]
    scn.name = "sign_corridor"
    return scn


# direction vectors and right-hand lane offsets, right-hand traffic
_DIRS = {
    "E": (np.array([1.0, 0.0]), np.array([0.0, -LANE_OFFSET])),
    "W": (np.array([-1.0, 0.0]), np.array([0.0, LANE_OFFSET])),
    "N": (np.array([0.0, 1.0]), np.array([LANE_OFFSET, 0.0])),
    "S": (np.array([0.0, -1.0]), np.array([-LANE_OFFSET, 0.0])),
}
_LEFT_OF = {"E": "N", "N": "W", "W": "S", "S": "E"}
_RIGHT_OF = {"E": "S", "S": "W", "W": "N", "N": "E"}


def _turn_connector(center, d_in: str, d_out: str):
    """Connector polyline inside an intersection box from approach d_in to exit d_out."""
    cx, cy = center
    vin, off_in = _DIRS[d_in]
    vout, off_out = _DIRS[d_out]
    entry = np.array([cx, cy]) - vin * BOX_HALF + off_in
    exit_ = np.array([cx, cy]) + vout * BOX_HALF + off_out
    if d_in == d_out:
        return _line(entry, exit_, spacing=2.0)
    h_in = math.atan2(vin[1], vin[0])
    h_out = math.atan2(vout[1], vout[0])
    turn = wrap_angle(h_out - h_in)
    # circle center sits perpendicular to travel at both endpoints
    n_in = np.array([-vin[1], vin[0]]) * (1.0 if turn > 0 else -1.0)
    # solve |entry + r*n_in - exit| projections: for 90-degree turns the
    # center shares entry's along-axis and exit's cross-axis coordinates
    c = np.where(np.abs(vin) > 0.5, entry, exit_)
    radius = float(np.linalg.norm(entry - c))
    a0 = math.atan2(entry[1] - c[1], entry[0] - c[0])
    a1 = math.atan2(exit_[1] - c[1], exit_[0] - c[0])
    span = wrap_angle(a1 - a0)
    return _arc(c, radius, a0, a0 + span, spacing=1.0)


def grid_town(block=160.0, arm=100.0, cycle_green=20.0, cycle_yellow=3.0,
              seed=0, stop_sign_arms=("y0_E",)) -> Scenario:
    """2x2 signalized grid: four intersections, two-phase lights, optional
    mid-block stop signs on named outer arms."""
    rng = np.random.default_rng(seed)
    centers = {"a": (0.0, 0.0), "b": (block, 0.0), "c": (0.0, block), "d": (block, block)}
    lanes: dict = {}
    intersections = []
    lights = []
    signs = []

    def add_lane(lid, pts):
        lanes[lid] = Lane(id=lid, centerline=np.asarray(pts, dtype=np.float64),
                          width=LANE_WIDTH)

    # straight road segments between/around intersections, per direction
    lo, hi = -arm, block + arm
    cuts = [lo, 0.0, block, hi]

    def segments_on(axis_coord, horizontal, direction):
        vin, off = _DIRS[direction]
        segs = []
        spans = list(zip(cuts[:-1], cuts[1:]))
        for s0, s1 in spans:
            a0, a1 = s0, s1
            # trim intersection boxes off both ends
            if a0 in (0.0, block):
                a0 += BOX_HALF
            if a1 in (0.0, block):
                a1 -= BOX_HALF
            if horizontal:
                p0 = np.array([a0, axis_coord]) + off
                p1 = np.array([a1, axis_coord]) + off
            else:
                p0 = np.array([axis_coord, a0]) + off
                p1 = np.array([axis_coord, a1]) + off
            if direction in ("W", "S"):
                p0, p1 = p1, p0
            segs.append((p0, p1))
        if direction in ("W", "S"):
            segs = segs[::-1]
        return segs

    seg_ids: dict = {}
    for road_coord, horizontal, tag in ((0.0, True, "y0"), (block, True, "y1"),
                                        (0.0, False, "x0"), (block, False, "x1")):
        dirs = ("E", "W") if horizontal else ("N", "S")
        for d in dirs:
            for k, (p0, p1) in enumerate(segments_on(road_coord, horizontal, d)):
                lid = f"{tag}_{d}_{k}"
                add_lane(lid, _line(p0, p1))
                seg_ids[lid] = (p0, p1, d)

    # connectors and signals at each intersection
    phase_offsets = {name: float(rng.uniform(0.0, 2 * (cycle_green + cycle_yellow)))
                     for name in centers}
    for name, center in centers.items():
        group = []
        for d_in in ("E", "W", "N", "S"):
            vin, off_in = _DIRS[d_in]
            entry = np.array(center) - vin * BOX_HALF + off_in
            # find the lane whose centerline ends at this entry point
            approach = None
            for lid, lane in lanes.items():
                if "_conn_" in lid:
                    continue
                if np.linalg.norm(lane.centerline[-1] - entry) < 0.5:
                    approach = lid
                    break
            if approach is None:
                continue
            for d_out, kind in ((d_in, "s"), (_LEFT_OF[d_in], "l"), (_RIGHT_OF[d_in], "r")):
                cid = f"{name}_conn_{d_in}{d_out}_{kind}"
                add_lane(cid, _turn_connector(center, d_in, d_out))
                group.append(cid)
                lanes[approach].successors.append(cid)
                lanes[cid].predecessors.append(approach)
                vout, off_out = _DIRS[d_out]
                exit_pt = np.array(center) + vout * BOX_HALF + off_out
                for lid, lane in lanes.items():
                    if "_conn_" in lid:
                        continue
                    if np.linalg.norm(lane.centerline[0] - exit_pt) < 0.5:
                        lanes[cid].successors.append(lid)
                        lane.predecessors.append(cid)
                        break
            # signal head for this approach
            perp = np.array([-vin[1], vin[0]])
            line = np.array([entry - perp * (LANE_OFFSET + 0.25),
                             entry + perp * (LANE_OFFSET + 0.25)])
            green_first = d_in in ("E", "W")
            if green_first:
                schedule = [(LightColor.GREEN, cycle_green), (LightColor.YELLOW, cycle_yellow),
                            (LightColor.RED, cycle_green + cycle_yellow)]
            else:
                schedule = [(LightColor.RED, cycle_green + cycle_yellow),
                            (LightColor.GREEN, cycle_green), (LightColor.YELLOW, cycle_yellow)]
            lights.append(TrafficLight(id=f"{name}_{d_in}", stop_line=line,
                                       controlled_lane_ids=[approach],
                                       phase_schedule=schedule,
                                       phase_offset=phase_offsets[name]))
        intersections.append(group)

    # optional mid-block stop signs on outgoing outer arms
    for arm_tag in stop_sign_arms or ():
        # e.g. "y0_E": outermost eastbound segment of the y0 road
        road, d = arm_tag.split("_")
        candidates = [lid for lid in lanes
                      if lid.startswith(f"{road}_{d}_") and "_conn_" not in lid]
        if not candidates:
            continue
        lid = sorted(candidates)[-1]
        lane = lanes[lid]
        mid = lane.centerline[len(lane.centerline) // 2]
        d_vec, _ = _DIRS[d]
        perp = np.array([-d_vec[1], d_vec[0]])
        line = np.array([mid - perp * (LANE_OFFSET + 0.25), mid + perp * (LANE_OFFSET + 0.25)])
        signs.append(StopSign(id=f"ss_{arm_tag}", stop_line=line,
                              controlled_lane_ids=[lid], required_stop_duration=1.0))

    # pavement patches extend a little past the stop lines so corner
    # trajectories at the box edge stay on drivable surface
    network = RoadNetwork(
        lanes=lanes, intersections=intersections,
        intersection_boxes=[(c, BOX_HALF + 2.5) for c in centers.values()])
    return Scenario(name="grid_town", network=network, lights=lights, signs=signs,
                    seed=seed, ego_spawn=(-arm + 5.0, -LANE_OFFSET, 0.0))
