"""Counterfactual prompt/grid edits, applied at the model-input boundary.

Every edit is a pure function of (prompt, grid, intervention, tick);
stochastic kinds derive their randomness from (seed, tick) so replays and
repeated sessions stay bit-for-bit identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..model.prompt import ALL_COMPONENTS, Command, PromptBundle
from ..sim.bev import CH_ROUTE, BevGrid, _draw_polyline
from ..sim.geometry import SE2, wrap_angle
from ..config import BevConfig

KINDS = ("ZERO_COMPONENT", "SET_LIGHT", "MOVE_TARGET", "REPLACE_ROUTING",
         "SET_SPEED", "MAP_NOISE", "MAP_MASK", "BEV_MASK", "COMMAND_OVERRIDE")


@dataclass(frozen=True)
class Intervention:
    kind: str
    component: str = None             # ZERO_COMPONENT
    light_id: str = None              # SET_LIGHT; None edits every light row
    color: int = None                 # SET_LIGHT: 0 red, 1 yellow, 2 green
    target: tuple = None              # MOVE_TARGET: world (x, y, heading)
    routing: tuple = None             # REPLACE_ROUTING: world ((x, y), ...)
    speed: float = None               # SET_SPEED
    sigma: float = None               # MAP_NOISE
    prob: float = None                # MAP_MASK / BEV_MASK
    block: int = 4                    # BEV_MASK block size in cells
    command: int = None               # COMMAND_OVERRIDE
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown intervention kind {self.kind!r}")
        if self.kind == "ZERO_COMPONENT":
            if self.component not in ALL_COMPONENTS:
                raise ValueError(f"unknown component {self.component!r}")
        if self.kind == "SET_LIGHT" and self.color not in (0, 1, 2):
            raise ValueError("SET_LIGHT needs color in {0, 1, 2}")
        if self.kind == "MOVE_TARGET" and (self.target is None or len(self.target) != 3):
            raise ValueError("MOVE_TARGET needs (x, y, heading)")
        if self.kind == "REPLACE_ROUTING" and (self.routing is None or len(self.routing) < 2):
            raise ValueError("REPLACE_ROUTING needs a polyline of >= 2 points")
        if self.kind == "SET_SPEED" and (self.speed is None or not math.isfinite(self.speed)):
            raise ValueError("SET_SPEED needs a finite speed")
        if self.kind == "MAP_NOISE" and (self.sigma is None or self.sigma < 0):
            raise ValueError("MAP_NOISE needs sigma >= 0")
        if self.kind in ("MAP_MASK", "BEV_MASK"):
            if self.prob is None or not (0.0 <= self.prob <= 1.0):
                raise ValueError(f"{self.kind} needs prob in [0, 1]")
        if self.kind == "COMMAND_OVERRIDE" and self.command not in set(int(c) for c in Command):
            raise ValueError("COMMAND_OVERRIDE needs a valid command index")

    def as_dict(self):
        out = {"kind": self.kind, "seed": self.seed}
        for k in ("component", "light_id", "color", "speed", "sigma", "prob",
                  "block", "command"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        if self.target is not None:
            out["target"] = list(self.target)
        if self.routing is not None:
            out["routing"] = [list(p) for p in self.routing]
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "target" in d:
            d["target"] = tuple(d["target"])
        if "routing" in d:
            d["routing"] = tuple(tuple(p) for p in d["routing"])
        return cls(**d)


def _rng_for(iv: Intervention, tick: int):
    return np.random.default_rng([iv.seed & 0x7FFFFFFF, tick])


def _extract_routing_ahead(routing_world, pose: SE2, k: int):
    """K nearest-ahead points of a world polyline, 1 m apart, ego frame."""
    from ..sim.geometry import project_to_polyline, resample_polyline
    dense = resample_polyline(np.asarray(routing_world, dtype=np.float64), 1.0)
    s_ego, _, _ = project_to_polyline(dense, (pose.x, pose.y))
    i0 = int(math.ceil(s_ego - 1e-9))
    idx = np.clip(np.arange(i0, i0 + k), 0, len(dense) - 1)
    return pose.inverse_apply(dense[idx]), dense


def apply_intervention(prompt: PromptBundle, bev: BevGrid, iv: Intervention,
                       tick: int = 0):
    """Returns an edited (PromptBundle, BevGrid); inputs are not mutated."""
    p = prompt.copy()
    grid = bev.copy() if bev is not None else None
    kind = iv.kind

    if kind == "ZERO_COMPONENT":
        p.presence[iv.component] = 0.0

    elif kind == "SET_LIGHT":
        for i, lid in enumerate(p.light_ids):
            if iv.light_id is None or lid == iv.light_id:
                p.traffic_lights[i, 1:] = 0.0
                p.traffic_lights[i, 1 + int(iv.color)] = 1.0

    elif kind == "SET_SPEED":
        p.current_speed = float(iv.speed)

    elif kind == "COMMAND_OVERRIDE":
        p.command = int(iv.command)

    elif kind == "MOVE_TARGET":
        pose = SE2(*p.ego_pose)
        xy = pose.inverse_apply(np.array([iv.target[:2]]))[0]
        p.target_point = np.array([xy[0], xy[1],
                                   wrap_angle(iv.target[2] - pose.yaw)])

    elif kind == "REPLACE_ROUTING":
        pose = SE2(*p.ego_pose)
        pts_ego, dense = _extract_routing_ahead(iv.routing, pose,
                                                len(p.routing_points))
        p.routing_points = pts_ego
        if grid is not None:
            grid = _redraw_route_overlay(grid, dense, pose)

    elif kind == "MAP_NOISE":
        if iv.sigma > 0:
            rng = _rng_for(iv, tick)
            noise = rng.normal(0.0, iv.sigma, size=(len(p.map_vectors), 4))
            p.map_vectors[:, :4] += noise * p.map_present[:, None]

    elif kind == "MAP_MASK":
        rng = _rng_for(iv, tick)
        drop = rng.random(len(p.map_vectors)) < iv.prob
        p.map_vectors[drop] = 0.0
        p.map_present[drop] = 0.0

    elif kind == "BEV_MASK":
        rng = _rng_for(iv, tick)
        cells = grid.cells
        h, w, _ = cells.shape
        bh = max(int(iv.block), 1)
        nh, nw = -(-h // bh), -(-w // bh)
        drop = rng.random((nh, nw)) < iv.prob
        mask = np.repeat(np.repeat(drop, bh, axis=0), bh, axis=1)[:h, :w]
        cells[mask] = 0.0

    return p, grid


def _redraw_route_overlay(grid: BevGrid, routing_world, pose: SE2) -> BevGrid:
    from ..sim.bev import routing_window
    cfg = BevConfig(x_min=grid.x_min, x_max=grid.x_max,
                    y_min=grid.y_min, y_max=grid.y_max,
                    resolution=grid.resolution)
    grid.cells[:, :, CH_ROUTE] = 0.0
    window = routing_window(np.asarray(routing_world, dtype=np.float64),
                            (pose.x, pose.y), cfg.route_overlay_behind,
                            cfg.route_overlay_ahead)
    if len(window) >= 2:
        _draw_polyline(grid.cells[:, :, CH_ROUTE], pose.inverse_apply(window),
                       cfg.route_thickness / 2.0, cfg)
    return grid


def apply_grid_effects(prompt: PromptBundle, bev: BevGrid, iv: Intervention,
                       tick: int = 0) -> BevGrid:
    """Replay helper: re-apply only the grid-side effects of an intervention
    (recorded prompts already carry the prompt-side edits)."""
    if iv.kind == "BEV_MASK":
        _, grid = apply_intervention(prompt, bev, iv, tick)
        return grid
    if iv.kind == "REPLACE_ROUTING":
        pose = SE2(*prompt.ego_pose)
        from ..sim.geometry import resample_polyline
        dense = resample_polyline(np.asarray(iv.routing, dtype=np.float64), 1.0)
        return _redraw_route_overlay(bev.copy(), dense, pose)
    return bev
