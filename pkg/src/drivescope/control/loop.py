"""Closed-loop episode harness: 20 Hz physics, 2 Hz planning.

The harness is agent-agnostic: any driver exposing reset/plan/control runs
through the identical loop, so metrics depend only on the driven
trajectory.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from ..config import BevConfig, ModelConfig, PidConfig, SimConfig
from ..data.episode import EpisodeRecord, Frame
from ..model.prompt import build_prompt, route_signal_crossings
from ..sim.bev import rasterize_bev
from ..sim.geometry import SE2, project_to_polyline
from ..sim.infractions import InfractionKind, InfractionMonitor
from ..sim.metrics import DriveMetrics, ProgressTracker, infraction_score
from ..sim.world import step_world
from .pid import PidState, waypoints_to_control


def default_time_budget(route_length: float) -> float:
    return 2.0 * (route_length / 4.0 + 45.0)


class EpisodeRunner:
    """Owns per-episode state: monitor, progress, prompt context."""

    def __init__(self, scenario, route, sim_cfg: SimConfig, model_cfg: ModelConfig,
                 seed: int = 0):
        self.scenario = scenario
        self.route = route
        self.sim_cfg = sim_cfg
        self.model_cfg = model_cfg
        self.seed = seed
        self.state = scenario.initial_state(route.start_pose)
        self.monitor = InfractionMonitor(scenario, route, sim_cfg)
        self.tracker = ProgressTracker(route.routing, sim_cfg)
        self.light_crossings, self.sign_crossings = route_signal_crossings(
            route, scenario.lights, scenario.signs)
        self.speed_history = deque(maxlen=model_cfg.n_prev_speeds)
        self.s_ego = 0.0
        self.current_prompt = None

    def refresh_projection(self):
        ego = self.state.ego
        self.s_ego, _, _ = project_to_polyline(self.route.routing, (ego.x, ego.y))

    def leader_gap(self, max_ahead=35.0, lateral_max=2.2):
        ego = self.state.ego
        best = None
        for agent in self.state.agents:
            if math.hypot(agent.x - ego.x, agent.y - ego.y) > max_ahead + 10.0:
                continue
            s_a, lat, _ = project_to_polyline(self.route.routing, (agent.x, agent.y))
            if lat <= lateral_max and s_a > self.s_ego + 0.3:
                gap = s_a - self.s_ego - (agent.length + ego.length) / 2.0
                if gap < max_ahead and (best is None or gap < best):
                    best = gap
        return best

    def build_prompt(self, tick):
        prev = list(self.speed_history) or None
        return build_prompt(
            self.state, self.route, self.scenario.network,
            light_crossings=self.light_crossings, sign_crossings=self.sign_crossings,
            sign_active=self.monitor.sign_active, prev_speeds=prev,
            cfg=self.model_cfg, tick=tick)


def run_closed_loop(driver, scenario, route, seed=0,
                    sim_cfg: SimConfig = SimConfig(),
                    model_cfg: ModelConfig = ModelConfig(),
                    penalties=None, time_budget=None, max_planner_ticks=None):
    """Drive one route to completion/blocked/timeout.

    Returns (EpisodeRecord, DriveMetrics).
    """
    if time_budget is None:
        time_budget = default_time_budget(route.length)
    runner = EpisodeRunner(scenario, route, sim_cfg, model_cfg, seed)
    driver.reset(scenario, route)
    frames = []
    all_events = []
    terminated = "timeout"
    frame = None
    period = sim_cfg.planner_period

    while True:
        runner.refresh_projection()
        if runner.state.tick % period == 0:
            if max_planner_ticks is not None and len(frames) >= max_planner_ticks:
                terminated = "tick_limit"
                break
            runner.current_prompt = runner.build_prompt(runner.state.tick)
            plan = driver.plan(runner.state, runner)
            frame = Frame(tick=runner.state.tick, world=runner.state,
                          prompt=driver.recorded_prompt(runner) if hasattr(driver, "recorded_prompt")
                          else runner.current_prompt,
                          prediction=None if plan is None else np.asarray(plan))
            frames.append(frame)
            runner.speed_history.append(runner.state.ego.speed)

        cmd = driver.control(runner.state, runner)
        if frame is not None and frame.control is None:
            frame.control = cmd
        new_state = step_world(runner.state, cmd, sim_cfg.dt, scenario, sim_cfg)
        events = runner.monitor.update(runner.state, new_state)
        if events:
            frame.events.extend(events)
            all_events.extend(events)
        runner.state = new_state
        runner.tracker.update((new_state.ego.x, new_state.ego.y))

        if runner.tracker.completed:
            runner.tracker.mark_complete()
            terminated = "completed"
            break
        if any(e.kind == InfractionKind.BLOCKED for e in events):
            terminated = "blocked"
            break
        if new_state.sim_time >= time_budget:
            terminated = "timeout"
            break

    iv_dicts = [iv.as_dict() for iv in getattr(driver, "interventions", ())]
    episode = EpisodeRecord(
        scenario_ref=scenario.name, route_ref=route.name, frames=frames,
        infractions=all_events, terminated_reason=terminated, seed=seed,
        interventions=iv_dicts)
    rc = runner.tracker.rc
    is_score = infraction_score(all_events, penalties)
    counts: dict = {}
    for ev in all_events:
        counts[ev.kind.value] = counts.get(ev.kind.value, 0) + 1
    metrics = DriveMetrics(rc=rc, is_score=is_score, ds=rc * is_score,
                           infraction_counts=counts)
    episode.metrics = metrics.as_dict()
    return episode, metrics


class ExpertDriver:
    """Re-export so harness users don't import the data package."""

    def __new__(cls, *args, **kwargs):
        from ..data.expert import ExpertDriver as _Expert
        return _Expert(*args, **kwargs)


class ModelDriver:
    """Closed-loop driver around a trained planner: plans at 2 Hz, tracks
    the latest waypoints with PID at 20 Hz."""

    def __init__(self, planner, pid_cfg: PidConfig = PidConfig(),
                 bev_cfg: BevConfig = BevConfig(), interventions=()):
        self.planner = planner
        self.pid_cfg = pid_cfg
        self.bev_cfg = bev_cfg
        self.interventions = list(interventions)
        self.pid = PidState()
        self.last_waypoints = None
        self.last_pose = None
        self.last_prompt = None
        self.last_result = None

    def reset(self, scenario, route):
        self.planner.reset_memory()
        self.pid = PidState()
        self.last_waypoints = None
        self.last_pose = None
        self.last_prompt = None
        self.last_result = None

    def plan(self, state, runner):
        from ..causality.interventions import apply_intervention
        prompt = runner.current_prompt
        bev = rasterize_bev(state, runner.route, runner.scenario.network, self.bev_cfg)
        for iv in self.interventions:
            prompt, bev = apply_intervention(prompt, bev, iv, tick=state.tick)
        result = self.planner.predict_step(prompt, bev)
        ego = state.ego
        self.last_waypoints = result.waypoints
        self.last_pose = SE2(ego.x, ego.y, ego.yaw)
        self.last_prompt = prompt
        self.last_result = result
        return result.waypoints

    def recorded_prompt(self, runner):
        return self.last_prompt

    def control(self, state, runner):
        if self.last_waypoints is None:
            return waypoints_to_control(np.zeros((self.planner.cfg.waypoints, 2)),
                                        state.ego.speed, self.pid,
                                        runner.sim_cfg.dt, self.pid_cfg)[0]
        # express the stale plan in the current ego frame
        now = SE2(state.ego.x, state.ego.y, state.ego.yaw)
        world_wp = self.last_pose.apply(self.last_waypoints)
        wp = now.inverse_apply(world_wp)
        cmd, self.pid = waypoints_to_control(wp, state.ego.speed, self.pid,
                                             runner.sim_cfg.dt, self.pid_cfg)
        return cmd
