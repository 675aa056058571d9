"""Scenario documents: road network + signals + scripted agents, JSON-backed."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import heading_at_arclength, polyline_arclength, segments_intersect
from .road import Lane, LightColor, RoadNetwork, StopSign, TrafficLight
from .world import ROLE_EGO, ROLE_PEDESTRIAN, AgentState, WorldState

SCHEMA_VERSION = 1


@dataclass
class AgentScript:
    id: str
    role: str
    path: np.ndarray                  # (N, 2) world polyline
    cruise_speed: float
    start_time: float = 0.0
    length: float = 4.5
    width: float = 2.0
    static: bool = False

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=np.float64)


@dataclass
class Scenario:
    name: str
    network: RoadNetwork
    lights: list = field(default_factory=list)
    signs: list = field(default_factory=list)
    agent_scripts: dict = field(default_factory=dict)   # id -> AgentScript
    seed: int = 0
    weather_tag: str = "clear"
    ego_spawn: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.agent_light_crossings = {
            aid: self._path_line_crossings(script.path, self.lights)
            for aid, script in self.agent_scripts.items()
            if script.role != ROLE_PEDESTRIAN and not script.static
        }

    @staticmethod
    def _path_line_crossings(path, lights):
        """Arclengths at which a path crosses each light's stop line."""
        crossings = []
        cs = polyline_arclength(path)
        for light in lights:
            q1, q2 = light.stop_line
            for i in range(len(path) - 1):
                if segments_intersect(path[i], path[i + 1], q1, q2):
                    crossings.append((float(cs[i]), light.id))
                    break
        crossings.sort()
        return tuple(crossings)

    def initial_state(self, ego_pose=None) -> WorldState:
        pose = tuple(ego_pose) if ego_pose is not None else tuple(self.ego_spawn)
        ego = AgentState(id="ego", x=pose[0], y=pose[1], yaw=pose[2], speed=0.0,
                         length=4.5, width=2.0, role=ROLE_EGO)
        agents = []
        for script in self.agent_scripts.values():
            yaw = heading_at_arclength(script.path, 0.0)
            agents.append(AgentState(
                id=script.id, x=float(script.path[0, 0]), y=float(script.path[0, 1]),
                yaw=yaw, speed=0.0, length=script.length, width=script.width,
                role=script.role, static=script.static))
        colors = {l.id: l.color_at(0.0) for l in self.lights}
        return WorldState(sim_time=0.0, tick=0, ego=ego, agents=tuple(agents),
                          light_colors=colors, weather_tag=self.weather_tag)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "weather_tag": self.weather_tag,
            "ego_spawn": list(self.ego_spawn),
            "road_network": {
                "lanes": [{
                    "id": l.id,
                    "centerline": l.centerline.tolist(),
                    "width": l.width,
                    "successors": list(l.successors),
                    "predecessors": list(l.predecessors),
                    "left_neighbor": l.left_neighbor,
                    "right_neighbor": l.right_neighbor,
                } for l in self.network.lanes.values()],
                "intersections": [list(g) for g in self.network.intersections],
                "intersection_boxes": [[list(c), h] for c, h in self.network.intersection_boxes],
            },
            "lights": [{
                "id": l.id,
                "stop_line": l.stop_line.tolist(),
                "controlled_lane_ids": list(l.controlled_lane_ids),
                "phase_schedule": [[int(c), d] for c, d in l.phase_schedule],
                "phase_offset": l.phase_offset,
            } for l in self.lights],
            "signs": [{
                "id": s.id,
                "stop_line": s.stop_line.tolist(),
                "controlled_lane_ids": list(s.controlled_lane_ids),
                "required_stop_duration": s.required_stop_duration,
            } for s in self.signs],
            "agents": [{
                "id": a.id,
                "role": a.role,
                "path": a.path.tolist(),
                "cruise_speed": a.cruise_speed,
                "start_time": a.start_time,
                "length": a.length,
                "width": a.width,
                "static": a.static,
            } for a in self.agent_scripts.values()],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported scenario schema_version {d.get('schema_version')!r}")
        rn = d["road_network"]
        lanes = {l["id"]: Lane(
            id=l["id"], centerline=np.array(l["centerline"]), width=l["width"],
            successors=list(l.get("successors", [])),
            predecessors=list(l.get("predecessors", [])),
            left_neighbor=l.get("left_neighbor"), right_neighbor=l.get("right_neighbor"),
        ) for l in rn["lanes"]}
        network = RoadNetwork(
            lanes=lanes,
            intersections=[list(g) for g in rn.get("intersections", [])],
            intersection_boxes=[(tuple(c), h) for c, h in rn.get("intersection_boxes", [])])
        lights = [TrafficLight(
            id=l["id"], stop_line=np.array(l["stop_line"]),
            controlled_lane_ids=list(l["controlled_lane_ids"]),
            phase_schedule=[(LightColor(c), dur) for c, dur in l["phase_schedule"]],
            phase_offset=l.get("phase_offset", 0.0)) for l in d.get("lights", [])]
        signs = [StopSign(
            id=s["id"], stop_line=np.array(s["stop_line"]),
            controlled_lane_ids=list(s["controlled_lane_ids"]),
            required_stop_duration=s.get("required_stop_duration", 1.0))
            for s in d.get("signs", [])]
        scripts = {a["id"]: AgentScript(
            id=a["id"], role=a["role"], path=np.array(a["path"]),
            cruise_speed=a["cruise_speed"], start_time=a.get("start_time", 0.0),
            length=a.get("length", 4.5), width=a.get("width", 2.0),
            static=a.get("static", False)) for a in d.get("agents", [])}
        return cls(name=d["name"], network=network, lights=lights, signs=signs,
                   agent_scripts=scripts, seed=d.get("seed", 0),
                   weather_tag=d.get("weather_tag", "clear"),
                   ego_spawn=tuple(d.get("ego_spawn", (0.0, 0.0, 0.0))))


def save_scenario(scenario: Scenario, path):
    Path(path).write_text(json.dumps(scenario.to_dict()))


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text()))
