"""End-to-end artifact pipeline: assets -> expert dataset -> filtration ->
training. Stages skip when their outputs already exist, so the acceptance
suite reuses a previous build."""
from __future__ import annotations

import dataclasses
import time
from pathlib import Path

from .assets import build_all
from .config import ModelConfig, TrainConfig
from .data.collect import collect_dataset, filter_dataset_dir
from .model.train import train_planner

# the tuned desk-benchmark training recipe; the acceptance suite uses it
# as-is. History-prone / redundancy-prone components get heavy dropout
# (copycat mitigation); navigation, perception and signal inputs get none,
# so the model's reliance on them stays intact and ablations expose it.
DESK_TRAIN = TrainConfig(
    steps=1600, batch_size=32, lr_max=1e-3, lr_min=1e-5,
    p_drop=0.1,
    p_drop_overrides={
        "prev_speeds": 0.5, "map": 0.3, "command": 0.3, "stop_signs": 0.2,
        "obstacles": 0.4, "current_speed": 0.1,
        "bev": 0.0, "routing": 0.0, "target_point": 0.0, "traffic_lights": 0.0,
    },
    history_frames=3, seed=0, log_every=50)

QUICK_TRAIN = dataclasses.replace(DESK_TRAIN, steps=120)


def _stage(name, out_paths, force, fn, verbose=True):
    paths = [Path(p) for p in (out_paths if isinstance(out_paths, (list, tuple))
                               else [out_paths])]
    if not force and all(p.exists() for p in paths):
        if verbose:
            print(f"[pipeline] {name}: cached", flush=True)
        return
    t0 = time.time()
    if verbose:
        print(f"[pipeline] {name}: running", flush=True)
    fn()
    if verbose:
        print(f"[pipeline] {name}: done in {time.time() - t0:.0f}s", flush=True)


def build(root, quick=False, force=False, seed=0, verbose=True):
    """Returns dict of artifact locations: assets dir, dataset dir, checkpoint."""
    root = Path(root)
    assets_dir = root / "assets"
    raw_dir = root / "data_raw"
    data_dir = root / "data"
    ckpt = root / "checkpoints" / "desk.npz"

    _stage("assets", assets_dir / "assets.json", force,
           lambda: build_all(assets_dir, seed=seed, quick=quick), verbose)

    def do_collect():
        scenario_files = sorted((assets_dir / "scenarios").glob("*.json"))
        scenario_files = [p for p in scenario_files
                          if not p.stem.startswith(("eval_", "obstacle", "fork"))]
        collect_dataset(scenario_files, raw_dir,
                        routes_per_scenario=4 if quick else 14,
                        seed=seed, min_length=120.0 if quick else 240.0,
                        max_length=200.0 if quick else 400.0, verbose=verbose)

    _stage("collect", raw_dir / "manifest.json", force, do_collect, verbose)
    _stage("filter", data_dir / "manifest.json", force,
           lambda: filter_dataset_dir(raw_dir, data_dir, verbose=verbose), verbose)

    def do_train():
        ckpt.parent.mkdir(parents=True, exist_ok=True)
        tc = QUICK_TRAIN if quick else DESK_TRAIN
        train_planner(str(data_dir), ModelConfig(), tc, out_path=ckpt,
                      verbose=verbose)

    _stage("train", ckpt, force, do_train, verbose)
    return {"assets": str(assets_dir), "data": str(data_dir), "ckpt": str(ckpt)}
