"""Rule-based privileged expert: pure-pursuit steering plus target-speed
logic for lights, signs, leaders, curvature, and the route end."""
from __future__ import annotations

import math

import numpy as np

from ..config import ExpertConfig, SimConfig
from ..control.command import ControlCommand
from ..sim.geometry import (SE2, heading_at_arclength, point_at_arclength,
                            wrap_angle)
from ..sim.road import LightColor


def _approach_speed(distance, margin, decel):
    return math.sqrt(2.0 * decel * max(distance - margin, 0.0))


class ExpertDriver:
    """Privileged driver; produces controls every physics tick."""

    def __init__(self, cfg: ExpertConfig = ExpertConfig(), sim_cfg: SimConfig = SimConfig()):
        self.cfg = cfg
        self.sim_cfg = sim_cfg

    def reset(self, scenario, route):
        pass

    def plan(self, state, runner):
        return None

    def control(self, state, runner) -> ControlCommand:
        cfg = self.cfg
        ego = state.ego
        routing = runner.route.routing
        s_ego = runner.s_ego
        total = runner.route.length

        # pure pursuit toward a speed-scaled lookahead on the routing
        lookahead = min(max(cfg.lookahead_gain * ego.speed, cfg.lookahead_min),
                        cfg.lookahead_max)
        aim = point_at_arclength(routing, s_ego + lookahead)
        pose = SE2(ego.x, ego.y, ego.yaw)
        aim_ego = pose.inverse_apply(aim[None, :])[0]
        alpha = math.atan2(aim_ego[1], aim_ego[0])
        delta = math.atan2(2.0 * self.sim_cfg.wheelbase * math.sin(alpha), lookahead)
        steer = min(max(delta / self.sim_cfg.max_steer, -1.0), 1.0)

        target = cfg.cruise_speed

        # slow for curvature ahead
        h0 = heading_at_arclength(routing, s_ego)
        for ds in (6.0, 12.0):
            h1 = heading_at_arclength(routing, min(s_ego + ds, total))
            kappa = abs(wrap_angle(h1 - h0)) / ds
            if kappa > 1e-4:
                target = min(target, math.sqrt(cfg.lateral_accel_max / kappa))

        # red/yellow stop lines ahead on the route; a yellow too close to
        # stop for comfortably is driven through (legal), not slammed
        for s_c, light_id in runner.light_crossings:
            d = s_c - s_ego
            if not (0.0 < d < 60.0):
                continue
            color = state.light_colors.get(light_id)
            if color == LightColor.RED or (
                    color == LightColor.YELLOW
                    and d > ego.speed ** 2 / (2.0 * cfg.comfort_decel) + cfg.stop_margin):
                target = min(target, _approach_speed(d, cfg.stop_margin, cfg.comfort_decel))

        # stop signs with an unsatisfied hold
        for s_c, sign_id in runner.sign_crossings:
            d = s_c - s_ego
            if 0.0 < d < 60.0 and runner.monitor.sign_active(sign_id):
                target = min(target, _approach_speed(d, cfg.stop_margin, cfg.comfort_decel))

        # follow the leader within the route corridor
        gap = runner.leader_gap(max_ahead=35.0)
        if gap is not None:
            target = min(target, max(0.0, (gap - cfg.standoff) / cfg.time_gap))

        # ease into the route end
        target = min(target, _approach_speed(total - s_ego, 1.0, cfg.comfort_decel))

        accel = cfg.speed_kp * (target - ego.speed)
        accel = min(max(accel, -self.sim_cfg.max_brake), self.sim_cfg.max_accel)
        if target < 0.05 and ego.speed < 0.5:
            return ControlCommand(steer=steer, throttle=0.0, brake=1.0)
        if accel >= 0:
            return ControlCommand(steer=steer, throttle=accel / self.sim_cfg.max_accel, brake=0.0)
        return ControlCommand(steer=steer, throttle=0.0, brake=-accel / self.sim_cfg.max_brake)


def run_expert(scenario, route, seed=0, expert_cfg: ExpertConfig = ExpertConfig(),
               sim_cfg: SimConfig = SimConfig(), time_budget=None, record_labels=True):
    """Roll out the expert and return (EpisodeRecord, DriveMetrics) with
    imitation labels attached to each frame."""
    from ..control.loop import run_closed_loop
    from .labels import label_waypoints

    driver = ExpertDriver(expert_cfg, sim_cfg)
    episode, metrics = run_closed_loop(driver, scenario, route, seed=seed,
                                       sim_cfg=sim_cfg, time_budget=time_budget)
    if record_labels:
        from ..config import ModelConfig
        horizon = ModelConfig().waypoints
        for i, frame in enumerate(episode.frames):
            frame.expert_waypoints = label_waypoints(episode, i, horizon)
    return episode, metrics
