"""Infraction detection over consecutive world states.

Continuing conditions (overlap, off-road, deviation, blocked) are
debounced: one event per continuous condition episode. The monitor also
tracks stop-sign hold progress, which the prompt builder and expert read
through `sign_active`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..config import SimConfig
from .geometry import (boxes_overlap, oriented_box_corners, project_to_polyline,
                       segments_intersect, dist_points_to_segment)
from .road import LightColor


class InfractionKind(str, Enum):
    COLLISION_PEDESTRIAN = "COLLISION_PEDESTRIAN"
    COLLISION_VEHICLE = "COLLISION_VEHICLE"
    COLLISION_STATIC = "COLLISION_STATIC"
    RED_LIGHT = "RED_LIGHT"
    STOP_SIGN = "STOP_SIGN"
    OFF_ROAD = "OFF_ROAD"
    ROUTE_DEVIATION = "ROUTE_DEVIATION"
    BLOCKED = "BLOCKED"


@dataclass(frozen=True)
class InfractionEvent:
    kind: InfractionKind
    tick: int
    position: tuple

    def as_dict(self):
        return {"kind": self.kind.value, "tick": self.tick,
                "position": [self.position[0], self.position[1]]}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=InfractionKind(d["kind"]), tick=d["tick"],
                   position=tuple(d["position"]))


SIGN_APPROACH_DIST = 12.0


class InfractionMonitor:
    def __init__(self, scenario, route, cfg: SimConfig = SimConfig()):
        self.scenario = scenario
        self.route = route
        self.cfg = cfg
        self._overlapping: set = set()
        self._off_road = False
        self._deviated = False
        self._blocked_time = 0.0
        self._blocked_fired = False
        self._sign_hold = {s.id: 0.0 for s in scenario.signs}
        self._sign_done = {s.id: False for s in scenario.signs}
        self._sign_crossed = {s.id: False for s in scenario.signs}

    def sign_active(self, sign_id: str) -> bool:
        """True while the stop obligation for this sign is unsatisfied."""
        return not self._sign_done[sign_id] and not self._sign_crossed[sign_id]

    def update(self, prev, next_state) -> list:
        """Detect infraction events between two consecutive ticks."""
        events = []
        cfg = self.cfg
        ego = next_state.ego
        dt = next_state.sim_time - prev.sim_time
        ego_corners = oriented_box_corners(ego.x, ego.y, ego.yaw, ego.length, ego.width)
        move = (np.array([prev.ego.x, prev.ego.y]), np.array([ego.x, ego.y]))

        # collisions
        now_overlapping = set()
        for agent in next_state.agents:
            if math.hypot(agent.x - ego.x, agent.y - ego.y) > 12.0:
                continue
            corners = oriented_box_corners(agent.x, agent.y, agent.yaw,
                                           agent.length, agent.width)
            if boxes_overlap(ego_corners, corners):
                now_overlapping.add(agent.id)
                if agent.id not in self._overlapping:
                    if agent.role == "PEDESTRIAN":
                        kind = InfractionKind.COLLISION_PEDESTRIAN
                    elif agent.static:
                        kind = InfractionKind.COLLISION_STATIC
                    else:
                        kind = InfractionKind.COLLISION_VEHICLE
                    events.append(InfractionEvent(kind, next_state.tick, (ego.x, ego.y)))
        self._overlapping = now_overlapping

        # red lights: movement segment crosses a red stop line
        for light in self.scenario.lights:
            if prev.light_colors.get(light.id) == LightColor.RED:
                q1, q2 = light.stop_line
                if segments_intersect(move[0], move[1], q1, q2):
                    events.append(InfractionEvent(InfractionKind.RED_LIGHT,
                                                  next_state.tick, (ego.x, ego.y)))

        # stop signs: hold accounting plus crossing check
        for sign in self.scenario.signs:
            if self._sign_crossed[sign.id]:
                continue
            q1, q2 = sign.stop_line
            near = dist_points_to_segment(np.array([[ego.x, ego.y]]), q1, q2)[0]
            if near <= SIGN_APPROACH_DIST and ego.speed < cfg.stop_speed:
                self._sign_hold[sign.id] += dt
                if self._sign_hold[sign.id] >= sign.required_stop_duration:
                    self._sign_done[sign.id] = True
            if segments_intersect(move[0], move[1], q1, q2):
                self._sign_crossed[sign.id] = True
                if not self._sign_done[sign.id]:
                    events.append(InfractionEvent(InfractionKind.STOP_SIGN,
                                                  next_state.tick, (ego.x, ego.y)))

        # off-road
        off = not self.scenario.network.point_on_drivable((ego.x, ego.y))
        if off and not self._off_road:
            events.append(InfractionEvent(InfractionKind.OFF_ROAD,
                                          next_state.tick, (ego.x, ego.y)))
        self._off_road = off

        # route deviation
        if self.route is not None:
            _, lateral, _ = project_to_polyline(self.route.routing, (ego.x, ego.y))
            dev = lateral > cfg.deviation_threshold
            if dev and not self._deviated:
                events.append(InfractionEvent(InfractionKind.ROUTE_DEVIATION,
                                              next_state.tick, (ego.x, ego.y)))
            self._deviated = dev

        # blocked: stationary too long with nothing legitimately in the way
        if ego.speed < cfg.stop_speed:
            self._blocked_time += dt
        else:
            self._blocked_time = 0.0
            self._blocked_fired = False
        if (self._blocked_time >= cfg.blocked_timeout and not self._blocked_fired
                and not self._excused(next_state)):
            events.append(InfractionEvent(InfractionKind.BLOCKED,
                                          next_state.tick, (ego.x, ego.y)))
            self._blocked_fired = True

        return events

    def _excused(self, state) -> bool:
        """Red light or leader directly ahead excuses standing still."""
        ego = state.ego
        heading = np.array([math.cos(ego.yaw), math.sin(ego.yaw)])
        ahead_probe = (np.array([ego.x, ego.y]), np.array([ego.x, ego.y]) + heading * 20.0)
        for light in self.scenario.lights:
            if state.light_colors.get(light.id) in (LightColor.RED, LightColor.YELLOW):
                if segments_intersect(ahead_probe[0], ahead_probe[1], *light.stop_line):
                    return True
        for agent in state.agents:
            rel = np.array([agent.x - ego.x, agent.y - ego.y])
            along = float(rel @ heading)
            lateral = abs(float(rel[0] * -heading[1] + rel[1] * heading[0]))
            if 0.0 < along < 15.0 and lateral < 2.2:
                return True
        return False


def detect_infractions(prev, next_state, scenario, route, cfg: SimConfig = SimConfig()):
    """One-shot detection between two states, without persistent debounce state."""
    return InfractionMonitor(scenario, route, cfg).update(prev, next_state)
