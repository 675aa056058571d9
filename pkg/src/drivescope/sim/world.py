"""World state and the deterministic per-tick update.

Ego follows a kinematic bicycle model; scripted agents track their
scenario paths with follow-the-leader speed logic and traffic-light
compliance. Everything is value-semantic: `step_world` returns a fresh
WorldState and never mutates its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..config import SimConfig
from ..control.command import ControlCommand
from .geometry import (heading_at_arclength, point_at_arclength, polyline_arclength,
                       wrap_angle)
from .road import LightColor


ROLE_EGO = "EGO"
ROLE_VEHICLE = "VEHICLE"
ROLE_PEDESTRIAN = "PEDESTRIAN"


@dataclass(frozen=True)
class AgentState:
    id: str
    x: float
    y: float
    yaw: float
    speed: float
    length: float
    width: float
    role: str = ROLE_VEHICLE
    static: bool = False
    path_s: float = 0.0               # progress along the agent's scripted path

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"agent {self.id}: non-positive extent")
        if self.role != ROLE_EGO and self.speed < 0:
            raise ValueError(f"agent {self.id}: negative speed")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_dict(self):
        return {"id": self.id, "x": self.x, "y": self.y, "yaw": self.yaw,
                "speed": self.speed, "length": self.length, "width": self.width,
                "role": self.role, "static": self.static, "path_s": self.path_s}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class WorldState:
    sim_time: float
    tick: int
    ego: AgentState
    agents: tuple = ()
    light_colors: dict = field(default_factory=dict)
    weather_tag: str = "clear"

    def __post_init__(self):
        if self.ego.role != ROLE_EGO:
            raise ValueError("ego agent must have role EGO")
        if any(a.role == ROLE_EGO for a in self.agents):
            raise ValueError("exactly one EGO allowed")

    def as_dict(self):
        return {"sim_time": self.sim_time, "tick": self.tick,
                "ego": self.ego.as_dict(),
                "agents": [a.as_dict() for a in self.agents],
                "light_colors": {k: int(v) for k, v in self.light_colors.items()},
                "weather_tag": self.weather_tag}

    @classmethod
    def from_dict(cls, d):
        return cls(sim_time=d["sim_time"], tick=d["tick"],
                   ego=AgentState.from_dict(d["ego"]),
                   agents=tuple(AgentState.from_dict(a) for a in d["agents"]),
                   light_colors={k: LightColor(v) for k, v in d["light_colors"].items()},
                   weather_tag=d.get("weather_tag", "clear"))


def _leader_gap(agent_path, agent_s, others, max_ahead=30.0, lateral=2.2):
    """Distance along the path to the nearest other agent ahead, and its speed."""
    best = None
    cs = polyline_arclength(agent_path)
    total = cs[-1]
    horizon = min(agent_s + max_ahead, total)
    # sample the path ahead and look for occupying agents
    for other_pos, other_speed, other_len in others:
        # project the other agent onto the path via coarse sampling
        n = max(int((horizon - agent_s) / 1.0), 1)
        ss = np.linspace(agent_s, horizon, n + 1)
        px = np.interp(ss, cs, agent_path[:, 0])
        py = np.interp(ss, cs, agent_path[:, 1])
        d = np.hypot(px - other_pos[0], py - other_pos[1])
        i = int(np.argmin(d))
        if d[i] <= lateral:
            gap = ss[i] - agent_s - other_len / 2.0
            if gap > 0.1 and (best is None or gap < best[0]):
                best = (gap, other_speed)
    return best


def _approach_speed(distance, margin, decel):
    """Comfortable speed allowing a stop `margin` before an obstacle at `distance`."""
    d = max(distance - margin, 0.0)
    return math.sqrt(2.0 * decel * d)


def _scripted_vehicle_speed(scenario, agent, state, cfg):
    script = scenario.agent_scripts[agent.id]
    target = script.cruise_speed
    # red or yellow light ahead on this agent's path
    for cross_s, light_id in scenario.agent_light_crossings.get(agent.id, ()):
        dist = cross_s - agent.path_s
        if 0.0 < dist < 30.0 and state.light_colors.get(light_id) in (LightColor.RED, LightColor.YELLOW):
            target = min(target, _approach_speed(dist, 2.0, 2.5))
    # follow the leader (other agents and the ego)
    others = [(state.ego.position, state.ego.speed, state.ego.length)]
    for other in state.agents:
        if other.id != agent.id:
            others.append((other.position, other.speed, other.length))
    lead = _leader_gap(script.path, agent.path_s, others)
    if lead is not None:
        gap, _ = lead
        target = min(target, max(0.0, (gap - 4.0) / 2.0))
    return target


def _step_scripted(scenario, agent: AgentState, state: WorldState, dt: float, cfg: SimConfig) -> AgentState:
    if agent.static:
        return agent
    script = scenario.agent_scripts.get(agent.id)
    if script is None:
        return agent
    if state.sim_time < script.start_time:
        return agent
    path = script.path
    total = float(polyline_arclength(path)[-1])
    if agent.path_s >= total - 1e-6:
        return replace(agent, speed=0.0)
    if agent.role == ROLE_PEDESTRIAN:
        speed = script.cruise_speed
    else:
        target = _scripted_vehicle_speed(scenario, agent, state, cfg)
        accel = min(max(1.5 * (target - agent.speed), -4.0), 2.5)
        speed = max(agent.speed + accel * dt, 0.0)
    new_s = min(agent.path_s + speed * dt, total)
    pos = point_at_arclength(path, new_s)
    yaw = heading_at_arclength(path, new_s)
    return replace(agent, x=float(pos[0]), y=float(pos[1]), yaw=yaw,
                   speed=speed, path_s=new_s)


def step_world(state: WorldState, ego_control: ControlCommand, dt: float,
               scenario, cfg: SimConfig = SimConfig()) -> WorldState:
    """Advance one physics tick. Deterministic given (state, control, dt, scenario)."""
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    for v in (ego_control.steer, ego_control.throttle, ego_control.brake):
        if not math.isfinite(v):
            raise ValueError("non-finite control value")

    ego = state.ego
    delta = ego_control.steer * cfg.max_steer
    accel = ego_control.throttle * cfg.max_accel - ego_control.brake * cfg.max_brake
    x = ego.x + ego.speed * math.cos(ego.yaw) * dt
    y = ego.y + ego.speed * math.sin(ego.yaw) * dt
    yaw = wrap_angle(ego.yaw + ego.speed / cfg.wheelbase * math.tan(delta) * dt)
    speed = max(ego.speed + accel * dt, 0.0)
    new_ego = replace(ego, x=x, y=y, yaw=float(yaw), speed=speed)

    new_agents = tuple(_step_scripted(scenario, a, state, dt, cfg) for a in state.agents)

    new_tick = state.tick + 1
    new_time = new_tick * dt
    colors = {l.id: l.color_at(new_time) for l in scenario.lights}
    return WorldState(sim_time=new_time, tick=new_tick, ego=new_ego,
                      agents=new_agents, light_colors=colors,
                      weather_tag=state.weather_tag)
