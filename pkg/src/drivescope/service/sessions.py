"""Interactive debugging sessions: one live closed loop per session, stepped
on request, with persistent interventions and retrospective analysis."""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import numpy as np

from ..config import BevConfig, ModelConfig, PidConfig, SimConfig
from ..causality.attention import head_response_single
from ..causality.gradients import token_gradients
from ..causality.replay import replay_analysis
from ..control.loop import EpisodeRunner, ModelDriver
from ..data.episode import EpisodeRecord, Frame
from ..model.network import Planner
from ..sim.infractions import InfractionKind
from ..sim.metrics import infraction_score
from ..sim.world import step_world

RING_CAPACITY = 256


class SessionConflict(RuntimeError):
    pass


@dataclass
class Session:
    id: str
    scenario_id: str
    route_id: str
    ckpt_id: str
    scenario: object
    route: object
    driver: ModelDriver
    runner: EpisodeRunner
    seed: int = 0
    paused: bool = True
    terminated: str = None
    frames: list = field(default_factory=list)
    events: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def planner_tick(self):
        return len(self.frames)

    def episode_record(self) -> EpisodeRecord:
        ring = self.frames[-RING_CAPACITY:]
        return EpisodeRecord(
            scenario_ref=self.scenario_id, route_ref=self.route_id,
            frames=ring, infractions=list(self.events),
            terminated_reason=self.terminated or "running", seed=self.seed,
            interventions=[iv.as_dict() for iv in self.driver.interventions])

    def metrics_now(self, penalties=None):
        rc = self.runner.tracker.rc
        isc = infraction_score(self.events, penalties)
        counts: dict = {}
        for ev in self.events:
            counts[ev.kind.value] = counts.get(ev.kind.value, 0) + 1
        return {"rc": rc, "is_score": isc, "ds": rc * isc,
                "infraction_counts": counts}


class SessionManager:
    def __init__(self, assets, sim_cfg=SimConfig(), model_cfg=ModelConfig(),
                 bev_cfg=BevConfig(), pid_cfg=PidConfig()):
        self.assets = assets
        self.sim_cfg = sim_cfg
        self.model_cfg = model_cfg
        self.bev_cfg = bev_cfg
        self.pid_cfg = pid_cfg
        self.sessions: dict = {}
        self._counter = itertools.count()
        self._create_lock = threading.Lock()

    def create(self, scenario_id, route_id, ckpt_id, seed=0) -> Session:
        scenario = self.assets.scenario(scenario_id)
        route = self.assets.route(route_id)
        params, model_cfg = self.assets.checkpoint(ckpt_id)
        planner = Planner(params=params, cfg=model_cfg, bev_cfg=self.bev_cfg)
        driver = ModelDriver(planner, pid_cfg=self.pid_cfg, bev_cfg=self.bev_cfg)
        driver.reset(scenario, route)
        runner = EpisodeRunner(scenario, route, self.sim_cfg, model_cfg, seed=seed)
        with self._create_lock:
            sid = f"s{next(self._counter):06d}"
            session = Session(id=sid, scenario_id=scenario_id, route_id=route_id,
                              ckpt_id=ckpt_id, scenario=scenario, route=route,
                              driver=driver, runner=runner, seed=seed)
            self.sessions[sid] = session
        return session

    def get(self, sid) -> Session:
        if sid not in self.sessions:
            raise KeyError(sid)
        return self.sessions[sid]

    def step(self, session: Session, n_planner_ticks: int):
        """Advance n planner ticks; returns the state delta the UI renders."""
        if not session.lock.acquire(blocking=False):
            raise SessionConflict(session.id)
        try:
            return self._step_locked(session, n_planner_ticks)
        finally:
            session.lock.release()

    def _step_locked(self, session, n):
        runner = session.runner
        driver = session.driver
        cfg = self.sim_cfg
        for _ in range(int(n)):
            if session.terminated:
                break
            runner.refresh_projection()
            runner.current_prompt = runner.build_prompt(runner.state.tick)
            driver.plan(runner.state, runner)
            frame = Frame(tick=runner.state.tick, world=runner.state,
                          prompt=driver.last_prompt,
                          prediction=np.asarray(driver.last_waypoints),
                          control=None)
            session.frames.append(frame)
            runner.speed_history.append(runner.state.ego.speed)
            for _ in range(cfg.planner_period):
                cmd = driver.control(runner.state, runner)
                if frame.control is None:
                    frame.control = cmd
                new_state = step_world(runner.state, cmd, cfg.dt,
                                       session.scenario, cfg)
                events = runner.monitor.update(runner.state, new_state)
                frame.events.extend(events)
                session.events.extend(events)
                runner.state = new_state
                runner.tracker.update((new_state.ego.x, new_state.ego.y))
                if runner.tracker.completed:
                    runner.tracker.mark_complete()
                    session.terminated = "completed"
                    break
                if any(e.kind == InfractionKind.BLOCKED for e in events):
                    session.terminated = "blocked"
                    break
        return self.snapshot(session, include_step_extras=True)

    def snapshot(self, session: Session, include_step_extras=False):
        runner = session.runner
        state = runner.state
        out = {
            "session_id": session.id,
            "tick": state.tick,
            "planner_tick": session.planner_tick,
            "sim_time": state.sim_time,
            "terminated": session.terminated,
            "world": state.as_dict(),
            "metrics": session.metrics_now(),
            "routing": np.asarray(session.route.routing).tolist(),
            "target_points": np.asarray(session.route.target_points).tolist(),
            "interventions": [iv.as_dict() for iv in session.driver.interventions],
        }
        if session.frames:
            last = session.frames[-1]
            out["prompt"] = last.prompt.as_dict()
            out["prediction"] = None if last.prediction is None else last.prediction.tolist()
            out["control"] = None if last.control is None else last.control.as_dict()
            out["events"] = [e.as_dict() for e in last.events]
        if include_step_extras and session.driver.last_result is not None:
            res = session.driver.last_result
            ta = token_gradients(res, tick=session.planner_tick - 1)
            hr = head_response_single(res)
            out["attribution"] = {"token_gradients": ta.as_dict(),
                                  "head_response": hr.as_dict()}
        return out

    def analysis(self, session: Session, kind: str, tick=None, layer="fused"):
        """Retrospective analysis at a recorded planner tick (default: last)."""
        if not session.frames:
            raise ValueError("session has no completed planner ticks")
        if not session.lock.acquire(blocking=False):
            raise SessionConflict(session.id)
        try:
            episode = session.episode_record()
            if tick is None:
                tick = episode.frames[-1].tick
            ticks = [t for t in (tick,)]
            bundle = replay_analysis(episode, session.driver.planner,
                                     session.scenario, session.route,
                                     layer=layer, bev_cfg=self.bev_cfg,
                                     ticks=ticks,
                                     include_maps=(kind == "activation_map"))
            if kind == "token_gradients":
                return {"tick": tick, "components": bundle["components"],
                        "g_x": {c: bundle["g_x"][c][0] for c in bundle["g_x"]},
                        "g_y": {c: bundle["g_y"][c][0] for c in bundle["g_y"]}}
            if kind == "head_response":
                return bundle["head_response"][0]
            if kind == "activation_map":
                return bundle["activation_maps"][0]
            raise ValueError(f"unknown analysis kind {kind!r}")
        finally:
            session.lock.release()
