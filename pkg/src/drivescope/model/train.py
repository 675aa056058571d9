"""Imitation training: mean L1 on waypoints, per-component input dropout,
Adam with cosine annealing.

Samples are windows of consecutive planner ticks. Every frame in a window
is supervised; each frame's fused BEV map feeds the next frames' memory
bank as a detached constant, so the temporal-fusion path trains at every
bank depth without extra conv passes.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..autodiff import Tensor, backward, mean, square
from ..autodiff.tensor import grad_of, tabs
from ..config import BevConfig, ModelConfig, TrainConfig
from ..data.episode import read_episode
from ..data.routes import load_route
from ..sim.bev import rasterize_bev
from ..sim.scenario import load_scenario
from .network import Planner
from .params import init_params, save_checkpoint
from .prompt import ALL_COMPONENTS, COMPONENTS, featurize, token_layout
from .warp import warp_feature_maps


def cosine_lr(step, total_steps, lr_max, lr_min):
    t = min(max(step / max(total_steps, 1), 0.0), 1.0)
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * t))


@dataclass
class TrainingSet:
    """Pre-featurized frames with a float32 raster cache."""

    feats: list                       # per frame: dict component -> (n, f)
    token_masks: np.ndarray           # (F, n_prompt_tokens)
    grids: np.ndarray                 # (F, H, W, C) float32
    poses: np.ndarray                 # (F, 3)
    labels: np.ndarray                # (F, T, 2)
    occupancy: np.ndarray             # (F, h', w') coarse occupancy for aux loss
    episode_spans: list               # (start, stop) frame ranges per episode

    @property
    def n_frames(self):
        return len(self.feats)

    def windows(self, length):
        out = []
        for start, stop in self.episode_spans:
            for s in range(start, stop - length + 1):
                out.append(s)
        return np.array(out, dtype=np.int64)


def load_training_set(data_dir, model_cfg: ModelConfig = ModelConfig(),
                      bev_cfg: BevConfig = BevConfig(), verbose=True) -> TrainingSet:
    data_dir = Path(data_dir)
    manifest = json.loads((data_dir / "manifest.json").read_text())
    feats_all, masks, grids, poses, labels, occ = [], [], [], [], [], []
    spans = []
    scenarios = {}
    routes = {}
    t0 = time.time()
    down = bev_cfg.height // 8, bev_cfg.width // 8
    for entry in manifest["episodes"]:
        ep = read_episode(data_dir / entry["file"])
        scn_file = entry["scenario_file"]
        route_file = entry["route_file"]
        if scn_file not in scenarios:
            scenarios[scn_file] = load_scenario(data_dir / scn_file)
        if route_file not in routes:
            routes[route_file] = load_route(data_dir / route_file)
        scenario = scenarios[scn_file]
        route = routes[route_file]
        start = len(feats_all)
        for frame in ep.frames:
            if frame.expert_waypoints is None:
                raise ValueError(f"{entry['file']}: frame without imitation labels")
            f, tm = featurize(frame.prompt, model_cfg)
            feats_all.append(f)
            masks.append(tm)
            grid = rasterize_bev(frame.world, route, scenario.network, bev_cfg)
            grids.append(grid.cells.astype(np.float32))
            ego = frame.world.ego
            poses.append((ego.x, ego.y, ego.yaw))
            labels.append(frame.expert_waypoints)
            o = grid.cells[:, :, 2].reshape(down[0], 8, down[1], 8).mean(axis=(1, 3))
            occ.append(o.astype(np.float32))
        spans.append((start, len(feats_all)))
    if not feats_all:
        raise ValueError(f"no frames found under {data_dir}")
    if verbose:
        print(f"[train] loaded {len(feats_all)} frames from "
              f"{len(spans)} episodes in {time.time() - t0:.1f}s")
    return TrainingSet(feats=feats_all, token_masks=np.array(masks),
                       grids=np.stack(grids), poses=np.array(poses),
                       labels=np.array(labels), occupancy=np.stack(occ),
                       episode_spans=spans)


class Adam:
    def __init__(self, params: dict, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float):
        c = self.cfg
        self.t += 1
        gnorm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        scale = min(1.0, c.grad_clip / (gnorm + 1e-12))
        bc1 = 1.0 - c.adam_beta1 ** self.t
        bc2 = 1.0 - c.adam_beta2 ** self.t
        for k, tensor in params.items():
            g = grads.get(k)
            if g is None:
                continue
            g = g * scale
            self.m[k] = c.adam_beta1 * self.m[k] + (1 - c.adam_beta1) * g
            self.v[k] = c.adam_beta2 * self.v[k] + (1 - c.adam_beta2) * (g * g)
            mhat = self.m[k] / bc1
            vhat = self.v[k] / bc2
            tensor.data -= lr * mhat / (np.sqrt(vhat) + c.adam_eps)
        return gnorm


def _component_dropout(rng, batch, cfg: TrainConfig):
    """Per-sample keep mask per component (prompt components + bev)."""
    keep = {}
    for comp in ALL_COMPONENTS:
        p = cfg.p_drop_overrides.get(comp, cfg.p_drop)
        keep[comp] = (rng.random(batch) >= p).astype(np.float64)
    return keep


def _expand_token_mask(base_mask, keep, model_cfg: ModelConfig):
    mask = base_mask.copy()
    i = 0
    for comp, n in token_layout(model_cfg):
        mask[:, i:i + n] *= keep[comp][:, None]
        i += n
    return mask


def train_planner(dataset, model_cfg: ModelConfig = ModelConfig(),
                  train_cfg: TrainConfig = TrainConfig(),
                  bev_cfg: BevConfig = BevConfig(),
                  out_path=None, verbose=True):
    """Train from scratch on a TrainingSet (or dataset dir).

    Returns (Planner, loss_curve list).
    """
    if isinstance(dataset, (str, Path)):
        dataset = load_training_set(dataset, model_cfg, bev_cfg, verbose=verbose)
    window = train_cfg.history_frames + 1
    starts = dataset.windows(window)
    if len(starts) == 0:
        raise ValueError("dataset has no windows long enough to train on")
    rng = np.random.default_rng(train_cfg.seed)
    planner = Planner(init_params(model_cfg, seed=train_cfg.seed),
                      cfg=model_cfg, bev_cfg=bev_cfg)
    adam = Adam(planner.params, train_cfg)
    n_windows = max(train_cfg.batch_size // window, 1)
    loss_curve = []
    t0 = time.time()
    steps_per_epoch = max(len(starts) // n_windows, 1)

    for step in range(train_cfg.steps):
        idx = starts[rng.integers(0, len(starts), size=n_windows)]
        lr = cosine_lr(step, train_cfg.steps, train_cfg.lr_max, train_cfg.lr_min)
        losses = []
        bank_feats = []               # detached fused maps of earlier window frames
        bank_poses = []
        grads_total: dict = {}
        for j in range(window):
            fi = idx + j
            feats = {comp: np.stack([dataset.feats[k][comp] for k in fi])
                     for comp, _ in token_layout(model_cfg)}
            keep = _component_dropout(rng, n_windows, train_cfg)
            token_mask = _expand_token_mask(dataset.token_masks[fi], keep, model_cfg)
            grids = dataset.grids[fi].astype(np.float64)
            poses = dataset.poses[fi]
            slots = []
            for f_prev, p_prev in zip(bank_feats[-model_cfg.bank_capacity:],
                                      bank_poses[-model_cfg.bank_capacity:]):
                warped = warp_feature_maps(f_prev, p_prev, poses, planner.extent)
                slots.append((warped, np.ones(n_windows)))
            res = planner.forward_batch(feats, token_mask, grids,
                                        warp_slots=slots, bev_mask=keep["bev"])
            label = Tensor(dataset.labels[fi])
            loss = mean(tabs(res.waypoints_t - label))
            if train_cfg.aux_occupancy_weight > 0:
                aux = planner.aux_occupancy(res.feature_maps["fused"])
                occ = Tensor(dataset.occupancy[fi].astype(np.float64)[..., None])
                loss = loss + train_cfg.aux_occupancy_weight * mean(square(aux - occ))
            g = backward(loss)
            for k, tensor in planner.params.items():
                pg = g.get(tensor)
                if pg is not None:
                    grads_total[k] = grads_total.get(k, 0.0) + pg
            losses.append(loss.item())
            bank_feats.append(res.fused_map)
            bank_poses.append(poses)
        for k in grads_total:
            grads_total[k] = grads_total[k] / window
        adam.step(planner.params, grads_total, lr)
        loss_curve.append(float(np.mean(losses)))

        if verbose and (step % train_cfg.log_every == 0 or step == train_cfg.steps - 1):
            recent = float(np.mean(loss_curve[-train_cfg.log_every:]))
            print(f"[train] step {step}/{train_cfg.steps} loss {recent:.4f} "
                  f"lr {lr:.2e} elapsed {time.time() - t0:.0f}s", flush=True)
        if (out_path is not None and train_cfg.checkpoint_every_epoch
                and step > 0 and step % steps_per_epoch == 0):
            save_checkpoint(out_path, planner.param_arrays(), model_cfg,
                            {"step": step, "loss": loss_curve[-1]})

    if out_path is not None:
        save_checkpoint(out_path, planner.param_arrays(), model_cfg,
                        {"step": train_cfg.steps, "loss": loss_curve[-1],
                         "loss_curve": loss_curve[::max(len(loss_curve) // 200, 1)]})
    return planner, loss_curve
