#!/usr/bin/env python3
"""Scenario-conditioned response patterns, desk-scale replication.

Case 1: a right turn with an obstacle on the curve — navigation components
and obstacles/BEV should dominate the gradient response around the turn.
Case 2: a mid-block stop line — the stop-sign and speed responses should
peak in the approach window.

Writes plot-ready JSON bundles (and PNG charts when matplotlib is
importable) under --out.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from drivescope.causality.replay import replay_analysis
from drivescope.control.loop import ModelDriver, run_closed_loop
from drivescope.data.routes import route_from_lanes
from drivescope.model.network import Planner
from drivescope.model.params import load_checkpoint
from drivescope.sim import maps
from drivescope.sim.scenario import AgentScript


def case_turn_with_obstacle(seed=0):
    scn = maps.grid_town(seed=seed, stop_sign_arms=())
    for light in scn.lights:
        light.phase_schedule = [(2, 1e6)]  # hold green; isolate the turn
    lanes = scn.network.lanes
    walk = ["y0_E_0", "a_conn_ES_r", "x0_S_2"]
    route = route_from_lanes(scn.network, walk, seed=seed, name="case1")
    # parked vehicle just past the curve exit
    curve_exit = lanes["x0_S_2"].centerline[2]
    scn.agent_scripts = {"obst": AgentScript(
        id="obst", role="VEHICLE", path=np.array([curve_exit, curve_exit + [0.0, -1.0]]),
        cruise_speed=0.0, length=4.4, width=1.9, static=True)}
    scn.__post_init__()
    scn.name = "case1_turn_obstacle"
    return scn, route


def case_midblock_stop(seed=0):
    scn = maps.sign_corridor_map(sign_at=90.0, length=220.0, hold=1.0)
    route = route_from_lanes(scn.network, ["main"], seed=seed, name="case2")
    scn.name = "case2_midblock_stop"
    return scn, route


def run_case(name, scn, route, planner, cfg, out_dir):
    driver = ModelDriver(Planner(params=planner.param_arrays(), cfg=cfg))
    episode, metrics = run_closed_loop(driver, scn, route, seed=0, model_cfg=cfg)
    bundle = replay_analysis(episode, driver.planner, scn, route, include_maps=True)
    doc = {"case": name, "metrics": metrics.as_dict(),
           "terminated": episode.terminated_reason, **bundle}
    out = out_dir / f"{name}.json"
    out.write_text(json.dumps(doc))
    print(f"[{name}] ds={metrics.ds:.1f} ticks={len(bundle['ticks'])} -> {out}")
    _maybe_plot(name, bundle, out_dir)
    return doc


def _maybe_plot(name, bundle, out_dir):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception:
        return
    ticks = bundle["ticks"]
    fig, axes = plt.subplots(2, 1, figsize=(10, 7), sharex=True)
    for comp in bundle["components"]:
        axes[0].plot(ticks, bundle["g_x"][comp], label=comp)
        axes[1].plot(ticks, bundle["g_y"][comp])
    axes[0].set_ylabel("token gradient, x")
    axes[1].set_ylabel("token gradient, y")
    axes[1].set_xlabel("physics tick")
    axes[0].legend(ncol=5, fontsize=7)
    fig.tight_layout()
    fig.savefig(out_dir / f"{name}_gradients.png", dpi=120)
    plt.close(fig)

    hr = bundle["head_response"]
    comps = bundle["components"]
    mid = hr[len(hr) // 2]
    resp = np.array(mid["response"])
    fig, axes = plt.subplots(1, resp.shape[0], figsize=(3 * resp.shape[0], 3),
                             sharey=True)
    axes = np.atleast_1d(axes)
    avg = [bundle["head_avg"][c] for c in comps]
    for h, ax in enumerate(axes):
        ax.bar(range(len(comps)), resp[h])
        ax.plot(range(len(comps)), avg, color="red", marker="o", markersize=3)
        ax.set_title(f"head {h}")
        ax.set_xticks(range(len(comps)))
        ax.set_xticklabels(comps, rotation=90, fontsize=6)
    fig.tight_layout()
    fig.savefig(out_dir / f"{name}_heads.png", dpi=120)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ckpt", required=True)
    ap.add_argument("--out", default="case_studies")
    args = ap.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, cfg, _ = load_checkpoint(args.ckpt)
    planner = Planner(params=params, cfg=cfg)

    scn, route = case_turn_with_obstacle()
    doc1 = run_case("case1_turn_obstacle", scn, route, planner, cfg, out_dir)
    scn, route = case_midblock_stop()
    doc2 = run_case("case2_midblock_stop", scn, route, planner, cfg, out_dir)

    # qualitative pattern summaries
    for doc in (doc1, doc2):
        g = doc["g_x"]
        peak = {c: int(np.argmax(g[c])) for c in doc["components"]}
        print(f"[{doc['case']}] per-component g_x argmax tick index: {peak}")


if __name__ == "__main__":
    main()
