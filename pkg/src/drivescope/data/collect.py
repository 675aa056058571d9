"""Dataset collection: expert rollouts over generated routes, written as
episode logs plus a manifest."""
from __future__ import annotations

import json
import shutil
import time
from pathlib import Path

import numpy as np

from ..config import ExpertConfig, SimConfig
from ..sim.scenario import load_scenario, save_scenario
from .episode import read_episode, write_episode
from .expert import run_expert
from .filtering import filter_dataset
from .routes import generate_routes, save_route

MANIFEST_VERSION = 1


def collect_dataset(scenario_files, out_dir, routes_per_scenario=10, seed=0,
                    min_length=240.0, max_length=400.0, avoid_sign_lanes=False,
                    sim_cfg: SimConfig = SimConfig(),
                    expert_cfg: ExpertConfig = ExpertConfig(), verbose=True):
    """Run the expert over freshly generated routes for every scenario.

    Writes episodes/, routes/, scenarios/ and manifest.json under out_dir.
    Returns the manifest dict.
    """
    out = Path(out_dir)
    (out / "episodes").mkdir(parents=True, exist_ok=True)
    (out / "routes").mkdir(exist_ok=True)
    (out / "scenarios").mkdir(exist_ok=True)
    entries = []
    t0 = time.time()
    for si, scn_path in enumerate(scenario_files):
        scenario = load_scenario(scn_path)
        scn_rel = f"scenarios/{Path(scn_path).name}"
        shutil.copy(scn_path, out / scn_rel)
        avoid = ()
        if avoid_sign_lanes:
            avoid = tuple(lid for s in scenario.signs for lid in s.controlled_lane_ids)
        routes = generate_routes(scenario.network, routes_per_scenario,
                                 seed=seed + 1000 * si, min_length=min_length,
                                 max_length=max_length, avoid_lanes=avoid,
                                 name_prefix=f"{scenario.name}_s{si}")
        for ri, route in enumerate(routes):
            ep_seed = seed + 1000 * si + ri
            episode, metrics = run_expert(scenario, route, seed=ep_seed,
                                          expert_cfg=expert_cfg, sim_cfg=sim_cfg)
            route_rel = f"routes/{route.name}.json"
            save_route(route, out / route_rel)
            ep_rel = f"episodes/{route.name}.jsonl"
            episode.scenario_ref = scn_rel
            episode.route_ref = route_rel
            write_episode(episode, out / ep_rel)
            entries.append({"file": ep_rel, "scenario_file": scn_rel,
                            "route_file": route_rel, "frames": len(episode.frames),
                            "seed": ep_seed, "infractions": len(episode.infractions),
                            "terminated": episode.terminated_reason,
                            "ds": metrics.ds})
            if verbose:
                print(f"[collect] {route.name}: {len(episode.frames)} frames, "
                      f"ds={metrics.ds:.1f}, {episode.terminated_reason} "
                      f"({time.time() - t0:.0f}s)", flush=True)
    manifest = {"schema_version": MANIFEST_VERSION, "seed": seed,
                "episodes": entries,
                "counts": {"episodes": len(entries),
                           "frames": sum(e["frames"] for e in entries)}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def filter_dataset_dir(in_dir, out_dir, sim_cfg: SimConfig = SimConfig(), verbose=True):
    """Apply filtration to a collected dataset directory."""
    src = Path(in_dir)
    out = Path(out_dir)
    (out / "episodes").mkdir(parents=True, exist_ok=True)
    (out / "routes").mkdir(exist_ok=True)
    (out / "scenarios").mkdir(exist_ok=True)
    manifest = json.loads((src / "manifest.json").read_text())
    episodes = [read_episode(src / e["file"]) for e in manifest["episodes"]]
    kept, report = filter_dataset(episodes, sim_cfg)
    kept_refs = {ep.route_ref for ep in kept}
    new_entries = []
    for ep, entry in zip_kept(episodes, manifest["episodes"], kept):
        write_episode(ep, out / entry["file"])
        for key in ("scenario_file", "route_file"):
            dst = out / entry[key]
            if not dst.exists():
                shutil.copy(src / entry[key], dst)
        entry = dict(entry, frames=len(ep.frames))
        new_entries.append(entry)
    new_manifest = {"schema_version": MANIFEST_VERSION, "seed": manifest.get("seed", 0),
                    "episodes": new_entries,
                    "counts": {"episodes": len(new_entries),
                               "frames": sum(e["frames"] for e in new_entries)},
                    "filtration_report": report.as_dict()}
    (out / "manifest.json").write_text(json.dumps(new_manifest, indent=2))
    if verbose:
        print(f"[filter] kept {report.kept_routes}/{report.total_episodes} episodes, "
              f"dropped {report.dropped_routes}, truncated {report.truncated_frames} frames")
    return new_manifest, report


def zip_kept(all_episodes, all_entries, kept):
    """Pair kept (possibly truncated) episodes with their manifest entries."""
    kept_by_ref = {ep.route_ref: ep for ep in kept}
    for ep, entry in zip(all_episodes, all_entries):
        k = kept_by_ref.get(ep.route_ref)
        if k is not None and k.scenario_ref == ep.scenario_ref:
            yield k, entry
