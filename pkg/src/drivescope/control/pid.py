"""Waypoints-to-control conversion: two PID loops and nothing else.

Lateral error is the bearing to an aim waypoint; longitudinal target speed
comes from the chord between waypoints. No rule-based overrides beyond the
standstill brake implied by a near-zero target speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import PidConfig
from .command import ControlCommand


@dataclass
class PidState:
    lat_integral: float = 0.0
    lat_prev_error: float = 0.0
    lon_integral: float = 0.0
    lon_prev_error: float = 0.0

    def copy(self):
        return PidState(self.lat_integral, self.lat_prev_error,
                        self.lon_integral, self.lon_prev_error)


def _pid(err, integral, prev_err, kp, ki, kd, dt, clamp):
    integral = min(max(integral + err * dt, -clamp), clamp)
    deriv = (err - prev_err) / dt
    return kp * err + ki * integral + kd * deriv, integral, err


def waypoints_to_control(waypoints, ego_speed: float, pid: PidState, dt: float,
                         cfg: PidConfig = PidConfig()):
    """Returns (ControlCommand, new PidState). Waypoints are ego-frame (T, 2)
    at fixed planner spacing."""
    if not (dt > 0):
        raise ValueError("dt must be positive")
    wp = np.asarray(waypoints, dtype=np.float64)
    if not np.all(np.isfinite(wp)):
        raise ValueError("non-finite waypoints")
    state = pid.copy()

    aim = wp[cfg.aim_index]
    lat_err = math.atan2(aim[1], max(aim[0], 0.3))
    steer, state.lat_integral, state.lat_prev_error = _pid(
        lat_err, state.lat_integral, state.lat_prev_error,
        cfg.lat_kp, cfg.lat_ki, cfg.lat_kd, dt, cfg.windup_clamp)
    steer = min(max(steer, -1.0), 1.0)

    chord = float(np.linalg.norm(wp[cfg.aim_index] - wp[0]))
    target_speed = chord / (cfg.aim_index * 0.5)
    if target_speed < cfg.stop_speed:
        return ControlCommand(steer=steer, throttle=0.0, brake=1.0), state

    lon_err = target_speed - ego_speed
    u, state.lon_integral, state.lon_prev_error = _pid(
        lon_err, state.lon_integral, state.lon_prev_error,
        cfg.lon_kp, cfg.lon_ki, cfg.lon_kd, dt, cfg.windup_clamp)
    if u >= cfg.deadband:
        return ControlCommand(steer=steer, throttle=min(u, 1.0), brake=0.0), state
    if u <= -cfg.deadband:
        return ControlCommand(steer=steer, throttle=0.0, brake=min(-u, 1.0)), state
    return ControlCommand(steer=steer, throttle=0.0, brake=0.0), state
