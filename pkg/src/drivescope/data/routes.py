"""Route generation: random walks over the lane graph, densified to 1 m."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model.prompt import Command
from ..sim.geometry import (heading_at_arclength, polyline_arclength,
                            resample_polyline, wrap_angle)

SCHEMA_VERSION = 1

TURN_LOOKAHEAD = 20.0   # m over which heading change classifies a turn
TURN_THRESHOLD = math.radians(30.0)


class RouteGenerationError(RuntimeError):
    pass


@dataclass
class RouteSpec:
    target_points: np.ndarray         # (P, 3) x, y, heading, world frame
    routing: np.ndarray               # (N, 2) at 1 m spacing
    commands: np.ndarray              # (N,) Command per routing point
    target_arclengths: np.ndarray = None
    name: str = "route"

    def __post_init__(self):
        self.target_points = np.asarray(self.target_points, dtype=np.float64)
        self.routing = np.asarray(self.routing, dtype=np.float64)
        self.commands = np.asarray(self.commands, dtype=np.int64)
        if self.target_arclengths is None:
            from ..sim.geometry import project_to_polyline
            self.target_arclengths = np.array(
                [project_to_polyline(self.routing, t[:2])[0] for t in self.target_points])
        else:
            self.target_arclengths = np.asarray(self.target_arclengths, dtype=np.float64)

    @property
    def length(self) -> float:
        return float(polyline_arclength(self.routing)[-1])

    @property
    def start_pose(self):
        h = heading_at_arclength(self.routing, 0.0)
        return (float(self.routing[0, 0]), float(self.routing[0, 1]), h)

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "name": self.name,
                "target_points": self.target_points.tolist(),
                "routing": self.routing.tolist(),
                "commands": self.commands.tolist(),
                "target_arclengths": self.target_arclengths.tolist()}

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported route schema_version {d.get('schema_version')!r}")
        return cls(target_points=np.array(d["target_points"]),
                   routing=np.array(d["routing"]),
                   commands=np.array(d["commands"]),
                   target_arclengths=np.array(d["target_arclengths"]),
                   name=d.get("name", "route"))


def save_route(route: RouteSpec, path):
    Path(path).write_text(json.dumps(route.to_dict()))


def load_route(path) -> RouteSpec:
    return RouteSpec.from_dict(json.loads(Path(path).read_text()))


def _lane_spans(network, lane_ids):
    """Concatenate centerlines; return (polyline, [(s0, s1, lane_id)])."""
    pts = []
    spans = []
    s = 0.0
    for lid in lane_ids:
        lane = network.lanes[lid]
        cl = lane.centerline
        if pts and np.linalg.norm(pts[-1] - cl[0]) < 0.25:
            cl = cl[1:]
        length = float(polyline_arclength(lane.centerline)[-1])
        spans.append((s, s + length, lid))
        s += length
        pts.extend(cl)
    return np.asarray(pts, dtype=np.float64), spans


def _classify_commands(routing, spans, network):
    """Per-routing-point command from upcoming geometry and lane kinds."""
    in_intersection = network.lane_ids_in_intersections()
    cs = polyline_arclength(routing)
    total = cs[-1]
    n = len(routing)
    commands = np.full(n, int(Command.LANE_FOLLOW), dtype=np.int64)

    def lane_at(s):
        for s0, s1, lid in spans:
            if s0 <= s <= s1 + 1e-6:
                return lid
        return spans[-1][2]

    change_kind = {}
    for s0, s1, lid in spans:
        lane = network.lanes[lid]
        # a neighbor link traversal marks a lane change
        preds = lane.predecessors
        for pid in preds:
            p = network.lanes.get(pid)
            if p is None:
                continue
            if p.left_neighbor == lid:
                change_kind[lid] = Command.CHANGE_LEFT
            elif p.right_neighbor == lid:
                change_kind[lid] = Command.CHANGE_RIGHT

    for i in range(n):
        s = cs[i]
        ahead = min(s + TURN_LOOKAHEAD, total)
        h0 = heading_at_arclength(routing, s)
        h1 = heading_at_arclength(routing, ahead)
        dh = wrap_angle(h1 - h0)
        window_lanes = {lane_at(min(s + k, total)) for k in (0.0, 5.0, 10.0, 15.0, 20.0)}
        near_intersection = any(l in in_intersection for l in window_lanes)
        changed = [change_kind[l] for l in window_lanes if l in change_kind]
        if changed:
            commands[i] = int(changed[0])
        elif near_intersection:
            if dh > TURN_THRESHOLD:
                commands[i] = int(Command.LEFT)
            elif dh < -TURN_THRESHOLD:
                commands[i] = int(Command.RIGHT)
            else:
                commands[i] = int(Command.STRAIGHT)
        else:
            commands[i] = int(Command.LANE_FOLLOW)
    return commands


def route_from_lanes(network, lane_ids, seed=0, name="route",
                     target_spacing=(50.0, 150.0), trim_start=0.0,
                     trim_end=0.0) -> RouteSpec:
    """Build a RouteSpec from an explicit lane sequence, optionally trimming
    meters off either end of the concatenated centerline."""
    rng = np.random.default_rng(seed)
    poly, spans = _lane_spans(network, lane_ids)
    if trim_start > 0.0 or trim_end > 0.0:
        dense = resample_polyline(poly, 1.0)
        total = polyline_arclength(dense)[-1]
        lo = int(max(trim_start, 0.0))
        hi = len(dense) - int(max(trim_end, 0.0))
        if hi - lo < 10:
            raise RouteGenerationError("trimming leaves too little route")
        poly = dense[lo:hi]
        spans = [(s0 - lo, s1 - lo, lid) for s0, s1, lid in spans]
    routing = resample_polyline(poly, 1.0)
    commands = _classify_commands(routing, spans, network)
    cs = polyline_arclength(routing)
    total = cs[-1]
    targets = []
    arcs = []
    s = 0.0
    while True:
        s += float(rng.uniform(*target_spacing))
        if s >= total - 5.0:
            break
        h = heading_at_arclength(routing, s)
        x, y = np.interp(s, cs, routing[:, 0]), np.interp(s, cs, routing[:, 1])
        targets.append([x, y, h])
        arcs.append(s)
    h_end = heading_at_arclength(routing, total)
    targets.append([routing[-1, 0], routing[-1, 1], h_end])
    arcs.append(total)
    return RouteSpec(target_points=np.array(targets), routing=routing,
                     commands=commands, target_arclengths=np.array(arcs), name=name)


def random_lane_walk(network, rng, min_length, max_length, spawn_lane=None,
                     avoid_lanes=()):
    """Random successor walk until the length budget is met."""
    non_connector = [lid for lid in sorted(network.lanes)
                     if lid not in network.lane_ids_in_intersections()
                     and lid not in avoid_lanes]
    if not non_connector:
        raise RouteGenerationError("no spawnable lanes")
    lane = spawn_lane if spawn_lane is not None else str(rng.choice(non_connector))
    budget = float(rng.uniform(min_length, max_length))
    walk = [lane]
    length = network.lanes[lane].length
    while length < budget:
        succ = [s for s in network.lanes[walk[-1]].successors if s not in avoid_lanes]
        if not succ:
            break
        nxt = str(rng.choice(sorted(succ)))
        walk.append(nxt)
        length += network.lanes[nxt].length
    return walk, length


def generate_routes(network, n: int, seed: int, min_length=240.0, max_length=400.0,
                    avoid_lanes=(), name_prefix="route") -> list:
    """Generate n routes by random walk; deterministic in seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    routes = []
    attempts = 0
    while len(routes) < n:
        attempts += 1
        if attempts > 50 * n:
            raise RouteGenerationError(
                f"could not reach the length budget from available spawns after {attempts} tries")
        walk, length = random_lane_walk(network, rng, min_length, max_length,
                                        avoid_lanes=avoid_lanes)
        if length < min_length * 0.5:
            continue
        route = route_from_lanes(network, walk, seed=int(rng.integers(2**31)),
                                 name=f"{name_prefix}_{len(routes):04d}")
        routes.append(route)
    return routes
