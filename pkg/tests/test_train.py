import numpy as np
import pytest

from drivescope.config import BevConfig, ModelConfig, TrainConfig
from drivescope.model.train import (TrainingSet, cosine_lr, load_training_set,
                                    train_planner)
from drivescope.model.prompt import featurize, token_layout

from conftest import random_prompt


def test_cosine_schedule_endpoints():
    assert cosine_lr(0, 1000, 1e-3, 1e-5) == 1e-3
    assert np.isclose(cosine_lr(1000, 1000, 1e-3, 1e-5), 1e-5)
    mid = cosine_lr(500, 1000, 1e-3, 1e-5)
    assert 1e-5 < mid < 1e-3
    assert np.isclose(mid, (1e-3 + 1e-5) / 2)


def synthetic_training_set(cfg, n_frames=32, seed=0):
    """A tiny drivable-looking dataset: labels are a fixed linear function
    of speed so the planner can overfit it."""
    rng = np.random.default_rng(seed)
    feats, masks, grids, poses, labels, occ = [], [], [], [], [], []
    for i in range(n_frames):
        p = random_prompt(rng, cfg)
        f, tm = featurize(p, cfg)
        feats.append(f)
        masks.append(tm)
        g = np.zeros((96, 96, 6), dtype=np.float32)
        g[:, 44:52, 0] = 1.0
        grids.append(g)
        poses.append((i * 2.0, 0.0, 0.0))
        v = p.current_speed
        xs = 0.5 * v * np.arange(1, cfg.waypoints + 1)
        labels.append(np.stack([xs, np.full(cfg.waypoints, 0.1 * v)], axis=1))
        occ.append(np.zeros((12, 12), dtype=np.float32))
    return TrainingSet(feats=feats, token_masks=np.array(masks),
                       grids=np.stack(grids), poses=np.array(poses),
                       labels=np.array(labels), occupancy=np.stack(occ),
                       episode_spans=[(0, n_frames)])


def test_overfit_small_batch(small_model_cfg):
    """Capacity sanity: a tiny planner memorizes 32 frames to < 0.05 m L1."""
    cfg = small_model_cfg
    ds = synthetic_training_set(cfg, n_frames=32)
    tc = TrainConfig(steps=2000, batch_size=16, lr_max=3e-3, lr_min=3e-4,
                     p_drop=0.0, history_frames=1, seed=0, log_every=10**9)
    planner, curve = train_planner(ds, cfg, tc, verbose=False)
    assert min(curve[-50:]) < 0.05
    assert curve[0] > 4 * min(curve[-50:])


def test_routing_dropout_hurts_fit_when_total(small_model_cfg):
    """p_drop(routing)=1 trains a routing-blind model: on data whose labels
    depend only on the routing geometry it must fit strictly worse than
    p_drop=0."""
    cfg = small_model_cfg
    ds = synthetic_training_set(cfg, n_frames=48, seed=3)
    # labels: y depends on the sign of the routing direction, x is a ramp
    for i in range(ds.n_frames):
        side = 3.0 if ds.feats[i]["routing"][0, 1] > 0 else -3.0
        xs = 1.0 * np.arange(1, cfg.waypoints + 1)
        ds.labels[i] = np.stack([xs, np.full(cfg.waypoints, side)], axis=1)

    losses = {}
    for p in (0.0, 1.0):
        tc = TrainConfig(steps=500, batch_size=16, lr_max=3e-3, lr_min=3e-4,
                         p_drop=0.0, p_drop_overrides={"routing": p},
                         history_frames=1, seed=1, log_every=10**9)
        planner, curve = train_planner(ds, cfg, tc, verbose=False)
        losses[p] = float(np.mean(curve[-30:]))
    # the blind model cannot beat the predict-the-median floor of ~1.5 m
    assert losses[1.0] > 2.0 * losses[0.0]
    assert losses[0.0] < 1.0


def test_train_rejects_empty_dataset(small_model_cfg, tmp_path):
    with pytest.raises((ValueError, FileNotFoundError)):
        train_planner(str(tmp_path), small_model_cfg, TrainConfig(steps=1))


def test_checkpoints_written(small_model_cfg, tmp_path):
    cfg = small_model_cfg
    ds = synthetic_training_set(cfg, n_frames=8)
    out = tmp_path / "ck.npz"
    tc = TrainConfig(steps=12, batch_size=8, history_frames=1, log_every=10**9)
    train_planner(ds, cfg, tc, out_path=out, verbose=False)
    assert out.exists()
    assert out.with_suffix(".json").exists()
    from drivescope.model.params import load_checkpoint
    params, cfg2, meta = load_checkpoint(out)
    assert cfg2.d == cfg.d
    assert "loss" in meta
