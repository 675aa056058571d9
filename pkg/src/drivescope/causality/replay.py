"""Per-tick recomputation of all three attribution instruments over a
recorded episode, emitting plot-ready time series."""
from __future__ import annotations

import numpy as np

from ..config import BevConfig
from ..model.network import Planner
from ..model.prompt import ALL_COMPONENTS
from ..sim.bev import rasterize_bev
from .actmap import activation_map
from .attention import head_response_single
from .gradients import token_gradients
from .interventions import Intervention, apply_grid_effects


def replay_analysis(episode, planner: Planner, scenario, route,
                    layer: str = "fused", bev_cfg: BevConfig = BevConfig(),
                    ticks=None, include_maps=True):
    """Recompute token gradients, head responses, and activation maps for
    every planner tick of a recorded episode.

    The memory bank is rebuilt by replaying frames in order, so results
    match what a live session computed at the same ticks. Returns a dict of
    aligned series.
    """
    clone = Planner(params=planner.param_arrays(), cfg=planner.cfg,
                    bev_cfg=bev_cfg)
    interventions = [Intervention.from_dict(d) for d in episode.interventions]
    wanted = None if ticks is None else set(ticks)
    out_ticks = []
    g_x = {c: [] for c in ALL_COMPONENTS}
    g_y = {c: [] for c in ALL_COMPONENTS}
    head_rows = []
    maps = []
    head_mean_acc = None
    for frame in episode.frames:
        bev = rasterize_bev(frame.world, route, scenario.network, bev_cfg)
        for iv in interventions:
            bev = apply_grid_effects(frame.prompt, bev, iv, tick=frame.tick)
        res = clone.predict_step(frame.prompt, bev, update_bank=True)
        if wanted is not None and frame.tick not in wanted:
            continue
        ta = token_gradients(res, tick=frame.tick)
        hr = head_response_single(res)
        hr.tick = frame.tick
        out_ticks.append(frame.tick)
        for c in ALL_COMPONENTS:
            g_x[c].append(ta.g_x[c])
            g_y[c].append(ta.g_y[c])
        head_rows.append(hr)
        mean_resp = hr.response.mean(axis=0)
        head_mean_acc = mean_resp if head_mean_acc is None else head_mean_acc + mean_resp
        if include_maps:
            am = activation_map(res, layer=layer, tick=frame.tick,
                                extent=(bev.x_min, bev.x_max, bev.y_min, bev.y_max))
            maps.append(am)
    if not out_ticks:
        raise ValueError("no planner ticks selected for replay analysis")
    avg = head_mean_acc / len(head_rows)
    comps = tuple(ALL_COMPONENTS)
    for hr in head_rows:
        hr.avg = {c: float(avg[i]) for i, c in enumerate(comps)}
    return {
        "ticks": out_ticks,
        "components": list(comps),
        "g_x": {c: [float(v) for v in g_x[c]] for c in comps},
        "g_y": {c: [float(v) for v in g_y[c]] for c in comps},
        "head_response": [hr.as_dict() for hr in head_rows],
        "head_avg": {c: float(avg[i]) for i, c in enumerate(comps)},
        "activation_maps": [m.as_dict() for m in maps] if include_maps else [],
    }
