"""Parameter initialization and checkpoint I/O for the planner."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..autodiff.checkpoint import load_checkpoint_file, save_checkpoint_file
from ..config import ModelConfig
from .prompt import Command, token_layout

# per-component encoder input widths
def component_feature_dims(cfg: ModelConfig):
    return {
        "routing": 8,
        "target_point": 4,
        "command": len(Command),
        "current_speed": 1,
        "prev_speeds": cfg.n_prev_speeds,
        "map": 20,
        "obstacles": 7,
        "stop_signs": 2 * cfg.n_stop_signs,
        "traffic_lights": 4 * cfg.n_traffic_lights,
    }


def init_params(cfg: ModelConfig = ModelConfig(), seed: int = 0) -> dict:
    """He/Xavier-initialized parameter arrays keyed by name."""
    rng = np.random.default_rng(seed)
    p = {}

    def he(shape, fan_in):
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)

    def xavier(shape, fan_in, fan_out):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=shape)

    d = cfg.d
    for comp, f in component_feature_dims(cfg).items():
        p[f"enc.{comp}.w1"] = he((f, d), f)
        p[f"enc.{comp}.w2"] = xavier((d, d), d, d)
        if comp != "target_point":
            # the target encoder is origin-preserving: zero displacement
            # maps to the zero token (= the component-absent state)
            p[f"enc.{comp}.b1"] = np.zeros(d)
            p[f"enc.{comp}.b2"] = np.zeros(d)

    chans = (6,) + tuple(cfg.conv_channels)
    for i in range(len(cfg.conv_channels)):
        ci, co = chans[i], chans[i + 1]
        p[f"conv{i + 1}.w"] = he((3, 3, ci, co), 9 * ci)
        p[f"conv{i + 1}.b"] = np.zeros(co)

    fuse_in = (1 + cfg.bank_capacity) * d
    p["fuse.w"] = he((1, 1, fuse_in, d), fuse_in)
    p["fuse.b"] = np.zeros(d)
    p["se.w1"] = he((d, cfg.se_hidden), d)
    p["se.b1"] = np.zeros(cfg.se_hidden)
    p["se.w2"] = xavier((cfg.se_hidden, d), cfg.se_hidden, d)
    p["se.b2"] = np.zeros(d)

    p["bev.pos"] = rng.normal(0.0, 0.02, size=(cfg.n_bev_tokens, d))
    p["ego_query"] = rng.normal(0.0, 0.02, size=(1, d))

    for l in range(cfg.n_layers):
        for mat in ("q", "k", "v", "o"):
            p[f"dec{l}.w{mat}"] = xavier((d, d), d, d)
            if mat in ("q", "o"):
                # k/v stay bias-free so a zeroed token contributes a zero
                # key and value rather than a learned bias the decoder
                # could use to paper over ablations
                p[f"dec{l}.b{mat}"] = np.zeros(d)
        p[f"dec{l}.ln1.g"] = np.ones(d)
        p[f"dec{l}.ln1.b"] = np.zeros(d)
        p[f"dec{l}.ffn.w1"] = he((d, cfg.ffn_hidden), d)
        p[f"dec{l}.ffn.b1"] = np.zeros(cfg.ffn_hidden)
        p[f"dec{l}.ffn.w2"] = xavier((cfg.ffn_hidden, d), cfg.ffn_hidden, d)
        p[f"dec{l}.ffn.b2"] = np.zeros(d)
        p[f"dec{l}.ln2.g"] = np.ones(d)
        p[f"dec{l}.ln2.b"] = np.zeros(d)

    p["head.w1"] = he((d, d), d)
    p["head.b1"] = np.zeros(d)
    p["head.w2"] = xavier((d, cfg.waypoints * 2), d, cfg.waypoints * 2)
    p["head.b2"] = np.zeros(cfg.waypoints * 2)

    p["aux.w"] = xavier((1, 1, d, 1), d, 1)
    p["aux.b"] = np.zeros(1)
    return p


def save_checkpoint(path, params: dict, cfg: ModelConfig, extra_meta: dict = None):
    """Write the .npz checkpoint plus a JSON hyperparameter sidecar."""
    path = Path(path)
    meta = {"model_config": dataclasses.asdict(cfg)}
    if extra_meta:
        meta.update(extra_meta)
    arrays = {k: (v.data if hasattr(v, "data") and not isinstance(v, np.ndarray) else np.asarray(v))
              for k, v in params.items()}
    save_checkpoint_file(path, arrays, meta)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2))


def load_checkpoint(path):
    """Returns (params dict, ModelConfig, meta)."""
    tensors, meta = load_checkpoint_file(path)
    mc = meta.get("model_config", {})
    mc = {k: tuple(v) if isinstance(v, list) else v for k, v in mc.items()}
    cfg = ModelConfig(**mc)
    return tensors, cfg, meta
