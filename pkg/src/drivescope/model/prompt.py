"""Structured planner input: the prompt bundle and its featurization.

A prompt is everything the planner sees besides the BEV grid: routing,
target point, command, speeds, vectorized map, obstacles, stop signs and
traffic lights, all in the ego frame, with per-component presence flags.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..config import ModelConfig
from ..sim.geometry import SE2, heading_at_arclength, project_to_polyline, wrap_angle
from ..sim.road import LightColor

# canonical component order; "bev" joins these ten for ablation/attribution
COMPONENTS = ("routing", "target_point", "command", "current_speed", "prev_speeds",
              "map", "obstacles", "stop_signs", "traffic_lights")
ALL_COMPONENTS = COMPONENTS + ("bev",)

PROMPT_HORIZON = 45.0        # m radius for map/obstacle collection
SIGNAL_HORIZON = 80.0        # m along-route for lights and signs


class Command(IntEnum):
    STRAIGHT = 0
    LEFT = 1
    RIGHT = 2
    LANE_FOLLOW = 3
    CHANGE_LEFT = 4
    CHANGE_RIGHT = 5


@dataclass
class PromptBundle:
    routing_points: np.ndarray        # (K, 2) ego frame
    target_point: np.ndarray          # (3,) x, y, relative heading
    command: int
    current_speed: float
    prev_speeds: np.ndarray           # (H,) oldest first
    map_vectors: np.ndarray           # (M, 5) x1 y1 x2 y2 width, ego frame
    map_present: np.ndarray           # (M,)
    obstacles: np.ndarray             # (N, 7) x y cos sin length width speed
    obstacles_present: np.ndarray     # (N,)
    stop_signs: np.ndarray            # (S, 2) distance, active
    traffic_lights: np.ndarray        # (L, 4) distance, onehot(R Y G)
    light_ids: list = field(default_factory=list)
    presence: dict = field(default_factory=dict)
    ego_pose: tuple = (0.0, 0.0, 0.0) # world frame, for UI and interventions
    tick: int = 0

    def copy(self) -> "PromptBundle":
        return PromptBundle(
            routing_points=self.routing_points.copy(),
            target_point=self.target_point.copy(),
            command=self.command,
            current_speed=self.current_speed,
            prev_speeds=self.prev_speeds.copy(),
            map_vectors=self.map_vectors.copy(),
            map_present=self.map_present.copy(),
            obstacles=self.obstacles.copy(),
            obstacles_present=self.obstacles_present.copy(),
            stop_signs=self.stop_signs.copy(),
            traffic_lights=self.traffic_lights.copy(),
            light_ids=list(self.light_ids),
            presence=dict(self.presence),
            ego_pose=tuple(self.ego_pose),
            tick=self.tick)

    def as_dict(self):
        return {
            "routing_points": self.routing_points.tolist(),
            "target_point": self.target_point.tolist(),
            "command": int(self.command),
            "current_speed": self.current_speed,
            "prev_speeds": self.prev_speeds.tolist(),
            "map_vectors": self.map_vectors.tolist(),
            "map_present": self.map_present.tolist(),
            "obstacles": self.obstacles.tolist(),
            "obstacles_present": self.obstacles_present.tolist(),
            "stop_signs": self.stop_signs.tolist(),
            "traffic_lights": self.traffic_lights.tolist(),
            "light_ids": list(self.light_ids),
            "presence": {k: float(v) for k, v in self.presence.items()},
            "ego_pose": list(self.ego_pose),
            "tick": self.tick,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            routing_points=np.array(d["routing_points"], dtype=np.float64),
            target_point=np.array(d["target_point"], dtype=np.float64),
            command=int(d["command"]),
            current_speed=float(d["current_speed"]),
            prev_speeds=np.array(d["prev_speeds"], dtype=np.float64),
            map_vectors=np.array(d["map_vectors"], dtype=np.float64).reshape(-1, 5),
            map_present=np.array(d["map_present"], dtype=np.float64),
            obstacles=np.array(d["obstacles"], dtype=np.float64).reshape(-1, 7),
            obstacles_present=np.array(d["obstacles_present"], dtype=np.float64),
            stop_signs=np.array(d["stop_signs"], dtype=np.float64).reshape(-1, 2),
            traffic_lights=np.array(d["traffic_lights"], dtype=np.float64).reshape(-1, 4),
            light_ids=list(d.get("light_ids", [])),
            presence={k: float(v) for k, v in d["presence"].items()},
            ego_pose=tuple(d.get("ego_pose", (0.0, 0.0, 0.0))),
            tick=int(d.get("tick", 0)))


def token_layout(cfg: ModelConfig):
    """(component, n_tokens) pairs in decoder order, prompt part only."""
    return [
        ("routing", cfg.n_routing_points // 4),
        ("target_point", 1),
        ("command", 1),
        ("current_speed", 1),
        ("prev_speeds", 1),
        ("map", cfg.n_map_segments // 4),
        ("obstacles", cfg.n_obstacles),
        ("stop_signs", 1),
        ("traffic_lights", 1),
    ]


def component_token_slices(cfg: ModelConfig):
    """component -> (start, stop) row range into the prompt-token matrix."""
    out = {}
    i = 0
    for comp, n in token_layout(cfg):
        out[comp] = (i, i + n)
        i += n
    return out


def route_signal_crossings(route, lights, signs):
    """Arclengths along the routing where stop lines are crossed."""
    from ..sim.geometry import polyline_arclength, segments_intersect
    routing = np.asarray(route.routing, dtype=np.float64)
    cs = polyline_arclength(routing)

    def crossings(elements):
        found = []
        for el in elements:
            q1, q2 = el.stop_line
            for i in range(len(routing) - 1):
                if segments_intersect(routing[i], routing[i + 1], q1, q2):
                    found.append((float(cs[i]), el.id))
                    break
        found.sort()
        return found

    return crossings(lights), crossings(signs)


def build_prompt(state, route, network, light_crossings=(), sign_crossings=(),
                 sign_active=None, prev_speeds=None, cfg: ModelConfig = ModelConfig(),
                 tick: int = 0) -> PromptBundle:
    """Assemble the ego-frame prompt from privileged simulator state."""
    ego = state.ego
    pose = SE2(ego.x, ego.y, ego.yaw)
    routing = np.asarray(route.routing, dtype=np.float64)
    s_ego, _, _ = project_to_polyline(routing, (ego.x, ego.y))

    # K nearest routing points ahead, 1 m apart, clamped at route end
    idx0 = int(math.ceil(s_ego - 1e-9))
    idx = np.clip(np.arange(idx0, idx0 + cfg.n_routing_points), 0, len(routing) - 1)
    routing_pts = pose.inverse_apply(routing[idx])

    # next sparse target point ahead
    t_arcs = getattr(route, "target_arclengths", None)
    targets = np.asarray(route.target_points, dtype=np.float64)
    if t_arcs is None:
        t_arcs = [project_to_polyline(routing, t[:2])[0] for t in targets]
    pick = len(targets) - 1
    for i, s in enumerate(t_arcs):
        if s > s_ego + 5.0:
            pick = i
            break
    t = targets[pick]
    t_xy = pose.inverse_apply(t[None, :2])[0]
    target = np.array([t_xy[0], t_xy[1], wrap_angle(t[2] - ego.yaw)])

    cmd_idx = int(np.clip(round(s_ego), 0, len(route.commands) - 1))
    command = int(route.commands[cmd_idx])

    if prev_speeds is None:
        prev = np.full(cfg.n_prev_speeds, ego.speed, dtype=np.float64)
    else:
        prev = np.asarray(prev_speeds, dtype=np.float64)[-cfg.n_prev_speeds:]
        if len(prev) < cfg.n_prev_speeds:
            prev = np.concatenate([np.full(cfg.n_prev_speeds - len(prev), prev[0] if len(prev) else ego.speed), prev])

    # vectorized map: nearest centerline segments within the horizon
    ego_pos = np.array([ego.x, ego.y])
    seg_rows = []
    for lane in network.lanes.values():
        pts = lane.centerline
        d = np.linalg.norm(pts - ego_pos, axis=1)
        if d.min() > PROMPT_HORIZON + 10.0:
            continue
        for i in range(len(pts) - 1):
            mid = (pts[i] + pts[i + 1]) / 2.0
            dist = float(np.linalg.norm(mid - ego_pos))
            if dist <= PROMPT_HORIZON:
                seg_rows.append((dist, pts[i], pts[i + 1], lane.width))
    seg_rows.sort(key=lambda r: r[0])
    map_vectors = np.zeros((cfg.n_map_segments, 5))
    map_present = np.zeros(cfg.n_map_segments)
    for k, (_, a, b, width) in enumerate(seg_rows[:cfg.n_map_segments]):
        ab = pose.inverse_apply(np.stack([a, b]))
        map_vectors[k] = [ab[0, 0], ab[0, 1], ab[1, 0], ab[1, 1], width]
        map_present[k] = 1.0

    # nearest obstacles
    obs_rows = []
    for agent in state.agents:
        dist = math.hypot(agent.x - ego.x, agent.y - ego.y)
        if dist <= PROMPT_HORIZON:
            obs_rows.append((dist, agent))
    obs_rows.sort(key=lambda r: r[0])
    obstacles = np.zeros((cfg.n_obstacles, 7))
    obstacles_present = np.zeros(cfg.n_obstacles)
    for k, (_, agent) in enumerate(obs_rows[:cfg.n_obstacles]):
        p = pose.inverse_apply(np.array([[agent.x, agent.y]]))[0]
        rel = wrap_angle(agent.yaw - ego.yaw)
        obstacles[k] = [p[0], p[1], math.cos(rel), math.sin(rel),
                        agent.length, agent.width, agent.speed]
        obstacles_present[k] = 1.0

    # signs and lights ahead along the route
    signs_arr = np.zeros((cfg.n_stop_signs, 2))
    n_signs = 0
    for s, sign_id in sign_crossings:
        dist = s - s_ego
        if 0.0 <= dist <= SIGNAL_HORIZON and n_signs < cfg.n_stop_signs:
            active = 1.0 if sign_active is None or sign_active(sign_id) else 0.0
            signs_arr[n_signs] = [dist, active]
            n_signs += 1

    lights_arr = np.zeros((cfg.n_traffic_lights, 4))
    light_ids = []
    n_lights = 0
    for s, light_id in light_crossings:
        dist = s - s_ego
        if -2.0 <= dist <= SIGNAL_HORIZON and n_lights < cfg.n_traffic_lights:
            color = state.light_colors.get(light_id, LightColor.GREEN)
            onehot = [0.0, 0.0, 0.0]
            onehot[int(color)] = 1.0
            lights_arr[n_lights] = [max(dist, 0.0)] + onehot
            light_ids.append(light_id)
            n_lights += 1

    presence = {
        "routing": 1.0,
        "target_point": 1.0,
        "command": 1.0,
        "current_speed": 1.0,
        "prev_speeds": 1.0,
        "map": 1.0 if map_present.any() else 0.0,
        "obstacles": 1.0 if obstacles_present.any() else 0.0,
        "stop_signs": 1.0 if n_signs else 0.0,
        "traffic_lights": 1.0 if n_lights else 0.0,
        "bev": 1.0,
    }
    return PromptBundle(
        routing_points=routing_pts, target_point=target, command=command,
        current_speed=ego.speed, prev_speeds=prev,
        map_vectors=map_vectors, map_present=map_present,
        obstacles=obstacles, obstacles_present=obstacles_present,
        stop_signs=signs_arr, traffic_lights=lights_arr, light_ids=light_ids,
        presence=presence, ego_pose=(ego.x, ego.y, ego.yaw), tick=tick)


def featurize(bundle: PromptBundle, cfg: ModelConfig = ModelConfig()):
    """Per-component normalized feature matrices (n_tokens, feat_dim) plus a
    per-token keep mask derived from presence and element padding."""
    dn, sn = cfg.dist_norm, cfg.speed_norm
    feats = {}
    feats["routing"] = (bundle.routing_points / dn).reshape(cfg.n_routing_points // 4, 8)
    # twist-style displacement: vanishes exactly when the goal is reached
    # and aligned, so the zero token doubles as "arrived"
    feats["target_point"] = np.array([[bundle.target_point[0] / dn,
                                       bundle.target_point[1] / dn,
                                       math.sin(bundle.target_point[2]),
                                       1.0 - math.cos(bundle.target_point[2])]])
    onehot = np.zeros((1, len(Command)))
    onehot[0, int(bundle.command)] = 1.0
    feats["command"] = onehot
    feats["current_speed"] = np.array([[bundle.current_speed / sn]])
    feats["prev_speeds"] = (bundle.prev_speeds / sn).reshape(1, cfg.n_prev_speeds)
    m = bundle.map_vectors.copy()
    m[:, :4] /= dn
    m[:, 4] /= 5.0
    feats["map"] = (m * bundle.map_present[:, None]).reshape(cfg.n_map_segments // 4, 20)
    o = bundle.obstacles.copy()
    o[:, :2] /= dn
    o[:, 4:6] /= 5.0
    o[:, 6] /= sn
    feats["obstacles"] = o * bundle.obstacles_present[:, None]
    s = bundle.stop_signs.copy()
    s[:, 0] /= dn
    feats["stop_signs"] = s.reshape(1, -1)
    tl = bundle.traffic_lights.copy()
    tl[:, 0] /= dn
    feats["traffic_lights"] = tl.reshape(1, -1)

    token_mask = []
    for comp, n in token_layout(cfg):
        p = bundle.presence.get(comp, 1.0)
        if comp == "obstacles":
            token_mask.extend((bundle.obstacles_present * p).tolist())
        elif comp == "map":
            chunk = bundle.map_present.reshape(-1, 4).max(axis=1)
            token_mask.extend((chunk * p).tolist())
        else:
            token_mask.extend([p] * n)
    return feats, np.array(token_mask, dtype=np.float64)
