"""Dataclass configs shared across the workbench.

Everything tunable lives here with the defaults the bundled assets and
acceptance suite are calibrated against.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05                  # physics step, 20 Hz
    planner_period: int = 10          # physics ticks per planner tick (2 Hz)
    wheelbase: float = 2.9
    max_steer: float = 0.5236         # rad, full lock
    max_accel: float = 3.0            # m/s^2 at throttle 1
    max_brake: float = 6.0            # m/s^2 at brake 1
    ego_length: float = 4.5
    ego_width: float = 2.0
    stop_speed: float = 0.1           # "stopped" threshold, m/s
    deviation_threshold: float = 8.0  # lateral m before ROUTE_DEVIATION
    blocked_timeout: float = 60.0     # s stationary before BLOCKED
    completion_tolerance: float = 2.0 # m from route end that counts as done


@dataclass(frozen=True)
class BevConfig:
    x_min: float = -8.0
    x_max: float = 30.4
    y_min: float = -19.2
    y_max: float = 19.2
    resolution: float = 0.4
    # channel order is part of the checkpoint contract
    channels: tuple = ("drivable", "lane_marking", "obstacle_occupancy",
                       "obstacle_heading_cos", "obstacle_heading_sin", "route_overlay")
    route_thickness: float = 1.2      # m, route_overlay stroke
    marking_thickness: float = 0.3    # m, lane boundary stroke
    # the overlay shows only the near-field routing window; mid-range
    # direction stays exclusive to the prompt's routing tokens
    route_overlay_behind: float = 8.0
    route_overlay_ahead: float = 14.0

    @property
    def height(self) -> int:
        return int(round((self.x_max - self.x_min) / self.resolution))

    @property
    def width(self) -> int:
        return int(round((self.y_max - self.y_min) / self.resolution))


# CARLA-leaderboard-convention penalty coefficients; all configurable.
DEFAULT_PENALTIES = {
    "COLLISION_PEDESTRIAN": 0.50,
    "COLLISION_VEHICLE": 0.60,
    "COLLISION_STATIC": 0.65,
    "RED_LIGHT": 0.70,
    "STOP_SIGN": 0.80,
    "OFF_ROAD": 0.70,
    "ROUTE_DEVIATION": 0.70,
    "BLOCKED": 0.70,
}


@dataclass(frozen=True)
class ExpertConfig:
    cruise_speed: float = 6.0
    lookahead_gain: float = 1.5       # s; lookahead = clamp(gain*v, min, max)
    lookahead_min: float = 3.0
    lookahead_max: float = 12.0
    time_gap: float = 2.0             # s behind leader
    standoff: float = 4.0             # m bumper-to-bumper floor
    stop_margin: float = 2.0          # m before stop lines
    comfort_decel: float = 2.5        # m/s^2 used in approach-speed profile
    lateral_accel_max: float = 2.0    # m/s^2 curve speed cap
    speed_kp: float = 1.5             # accel = kp * (v_target - v)


@dataclass(frozen=True)
class ModelConfig:
    d: int = 128
    n_layers: int = 3
    n_heads: int = 4
    ffn_hidden: int = 256
    n_routing_points: int = 20        # K, chunked 4 per token
    n_prev_speeds: int = 4            # H
    n_map_segments: int = 32          # M, chunked 4 per token
    n_obstacles: int = 10             # N, 1 token each
    n_stop_signs: int = 2             # folded into 1 token
    n_traffic_lights: int = 2         # folded into 1 token
    bank_capacity: int = 3            # B past feature maps
    conv_channels: tuple = (32, 64, 128)
    se_hidden: int = 32
    waypoints: int = 8                # T
    waypoint_dt: float = 0.5          # s between waypoints (planner period)
    dist_norm: float = 30.0           # m scale for coordinates fed to encoders
    speed_norm: float = 10.0          # m/s scale

    @property
    def n_prompt_tokens(self) -> int:
        return (self.n_routing_points // 4 + 1 + 1 + 1 + 1
                + self.n_map_segments // 4 + self.n_obstacles + 1 + 1)

    @property
    def n_bev_tokens(self) -> int:
        return 144  # 12x12 feature map


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 1600
    batch_size: int = 32
    lr_max: float = 1e-3
    lr_min: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 5.0
    p_drop: float = 0.1               # default per-component input-dropout rate
    # per-component overrides; keys from model.prompt.COMPONENTS + "bev"
    p_drop_overrides: dict = field(default_factory=dict)
    history_frames: int = 3           # memory-bank warmup depth during training
    aux_occupancy_weight: float = 0.0 # optional BEV reconstruction loss, off by default
    seed: int = 0
    checkpoint_every_epoch: bool = True
    log_every: int = 50


@dataclass(frozen=True)
class PidConfig:
    lat_kp: float = 1.2
    lat_ki: float = 0.05
    lat_kd: float = 0.3
    lon_kp: float = 0.8
    lon_ki: float = 0.1
    lon_kd: float = 0.1
    windup_clamp: float = 2.0
    aim_index: int = 2                # waypoint used for heading error
    deadband: float = 0.05            # |u| below this coasts
    stop_speed: float = 0.2           # target below this -> full brake


def config_fingerprint(*configs) -> str:
    """Stable hash of a group of configs, for report provenance."""
    blob = json.dumps([dataclasses.asdict(c) for c in configs], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
