"""The planner network: per-component MLP token encoders, a conv BEV
encoder with pose-aligned memory-bank fusion, and an ego-query
cross-attention decoder ending in a waypoint head.

All forward passes run on the autodiff tape so the causality instruments
can pull exact gradients at any recorded node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import (Tensor, add, concat, conv2d, gelu, layernorm, linear,
                        matmul, mean, mul, relu, reshape, sigmoid, softmax,
                        transpose)
from ..config import BevConfig, ModelConfig
from .params import init_params
from .prompt import component_token_slices, featurize, token_layout
from .warp import warp_feature_maps


@dataclass
class PredictionResult:
    waypoints: np.ndarray             # (T, 2) single sample or (B, T, 2)
    attention: np.ndarray             # (layers, B, heads, n_tokens)
    waypoints_t: Tensor = None
    prompt_embeddings: Tensor = None  # pre-mask (B, n_prompt, d)
    bev_tokens_pre: Tensor = None     # pre-mask (B, 144, d)
    feature_maps: dict = field(default_factory=dict)   # name -> Tensor (B, h, w, c)
    token_groups: dict = field(default_factory=dict)   # component -> global token range
    fused_map: np.ndarray = None      # (B, 12, 12, d) value copy

    def squeeze(self):
        """Single-sample view of waypoints."""
        return self.waypoints[0] if self.waypoints.ndim == 3 else self.waypoints


class Planner:
    """Holds parameters and the per-session memory bank."""

    def __init__(self, params=None, cfg: ModelConfig = ModelConfig(),
                 bev_cfg: BevConfig = BevConfig(), seed: int = 0):
        self.cfg = cfg
        self.bev_cfg = bev_cfg
        arrays = params if params is not None else init_params(cfg, seed)
        self.params = {k: Tensor(v, requires_grad=True, name=k)
                       for k, v in arrays.items()}
        self.bank = []                # [(feat (h, w, d) array, pose (3,))]
        h = bev_cfg.height
        for _ in cfg.conv_channels:
            h //= 2
        self.feat_hw = h
        self.extent = (bev_cfg.x_min, bev_cfg.x_max, bev_cfg.y_min, bev_cfg.y_max)

    # ------------------------------------------------------------- session

    def reset_memory(self):
        self.bank = []

    def param_arrays(self) -> dict:
        return {k: t.data.copy() for k, t in self.params.items()}

    # ------------------------------------------------------------- pieces

    def conv_trunk(self, grids: Tensor):
        p = self.params
        maps = {}
        h = grids
        for i in range(len(self.cfg.conv_channels)):
            h = relu(conv2d(h, p[f"conv{i + 1}.w"], p[f"conv{i + 1}.b"],
                            stride=2, padding="same"))
            maps[f"conv{i + 1}"] = h
        return h, maps

    def temporal_fuse(self, feat: Tensor, slot_feats, slot_valid):
        """feat (B, h, w, d); slot_feats list of (B, h, w, d) arrays already
        warped into the current frame; slot_valid list of (B,) masks.
        Returns feat unchanged when no slot is valid anywhere (identity
        path); otherwise a gated residual, exact identity per empty-bank
        sample."""
        p = self.params
        cfg = self.cfg
        b, h, w, d = feat.shape
        if not slot_feats or not any(v.any() for v in slot_valid):
            return feat
        parts = [feat]
        any_valid = np.zeros(b)
        for sf, valid in zip(slot_feats, slot_valid):
            parts.append(Tensor(sf * valid[:, None, None, None]))
            any_valid = np.maximum(any_valid, valid)
        for _ in range(cfg.bank_capacity - len(slot_feats)):
            parts.append(Tensor(np.zeros((b, h, w, d))))
        stack = concat(parts, axis=-1)
        g = relu(conv2d(stack, p["fuse.w"], p["fuse.b"], stride=1, padding="same"))
        s = mean(g, axis=(1, 2))
        gate = sigmoid(linear(relu(linear(s, p["se.w1"], p["se.b1"])),
                              p["se.w2"], p["se.b2"]))
        g = mul(g, reshape(gate, (b, 1, 1, d)))
        sel = Tensor(any_valid.reshape(b, 1, 1, 1))
        return add(feat, mul(g, sel))

    def encode_tokens(self, feats: dict, token_mask: np.ndarray):
        """Per-component MLPs -> (pre-mask embeddings, masked tokens)."""
        p = self.params
        embs = []
        for comp, _ in token_layout(self.cfg):
            f = feats[comp]
            if not isinstance(f, Tensor):
                f = Tensor(f)
            b1 = p.get(f"enc.{comp}.b1")
            b2 = p.get(f"enc.{comp}.b2")
            h = matmul(f, p[f"enc.{comp}.w1"])
            h = relu(add(h, b1) if b1 is not None else h)
            e = matmul(h, p[f"enc.{comp}.w2"])
            embs.append(add(e, b2) if b2 is not None else e)
        emb = concat(embs, axis=1)
        tokens = mul(emb, Tensor(token_mask[:, :, None]))
        return emb, tokens

    def _mha(self, x: Tensor, tokens: Tensor, layer: int):
        p = self.params
        cfg = self.cfg
        b, n, d = tokens.shape
        hn = cfg.n_heads
        dh = d // hn
        q = linear(x, p[f"dec{layer}.wq"], p[f"dec{layer}.bq"])
        k = linear(tokens, p[f"dec{layer}.wk"])
        v = linear(tokens, p[f"dec{layer}.wv"])
        qh = transpose(reshape(q, (b, 1, hn, dh)), (0, 2, 1, 3))
        kh = transpose(reshape(k, (b, n, hn, dh)), (0, 2, 3, 1))
        vh = transpose(reshape(v, (b, n, hn, dh)), (0, 2, 1, 3))
        attn = softmax(mul(matmul(qh, kh), 1.0 / math.sqrt(dh)), axis=-1)
        ctx = reshape(transpose(matmul(attn, vh), (0, 2, 1, 3)), (b, 1, d))
        return linear(ctx, p[f"dec{layer}.wo"], p[f"dec{layer}.bo"]), attn

    def decode(self, tokens: Tensor):
        p = self.params
        cfg = self.cfg
        b = tokens.shape[0]
        x = add(reshape(p["ego_query"], (1, 1, cfg.d)), Tensor(np.zeros((b, 1, cfg.d))))
        attn_all = []
        for l in range(cfg.n_layers):
            attn_out, attn = self._mha(x, tokens, l)
            attn_all.append(attn)
            x = layernorm(add(x, attn_out), p[f"dec{l}.ln1.g"], p[f"dec{l}.ln1.b"])
            ff = linear(gelu(linear(x, p[f"dec{l}.ffn.w1"], p[f"dec{l}.ffn.b1"])),
                        p[f"dec{l}.ffn.w2"], p[f"dec{l}.ffn.b2"])
            x = layernorm(add(x, ff), p[f"dec{l}.ln2.g"], p[f"dec{l}.ln2.b"])
        return x, attn_all

    def waypoint_head(self, ego_feat: Tensor):
        p = self.params
        cfg = self.cfg
        b = ego_feat.shape[0]
        h = reshape(ego_feat, (b, cfg.d))
        out = linear(relu(linear(h, p["head.w1"], p["head.b1"])),
                     p["head.w2"], p["head.b2"])
        return reshape(out, (b, cfg.waypoints, 2))

    def aux_occupancy(self, fused: Tensor) -> Tensor:
        return sigmoid(conv2d(fused, self.params["aux.w"], self.params["aux.b"],
                              stride=1, padding="same"))

    # ------------------------------------------------------------- forwards

    def forward_batch(self, feats: dict, token_mask: np.ndarray, grids: np.ndarray,
                      warp_slots=(), bev_mask=None) -> PredictionResult:
        """Full forward over a batch.

        warp_slots: list of (slot_feats (B, h, w, d), valid (B,)) already
        expressed in each sample's current frame. bev_mask: (B,) keep mask
        for the bev component.
        """
        cfg = self.cfg
        b = grids.shape[0]
        if bev_mask is None:
            bev_mask = np.ones(b)
        grids_t = grids if isinstance(grids, Tensor) else Tensor(np.asarray(grids, dtype=np.float64))
        feat, maps = self.conv_trunk(grids_t)
        fused = self.temporal_fuse(feat, [s for s, _ in warp_slots],
                                   [v for _, v in warp_slots])
        maps = dict(maps)
        maps["fused"] = fused
        bev_pre = add(reshape(fused, (b, cfg.n_bev_tokens, cfg.d)),
                      self.params["bev.pos"])
        bev_tokens = mul(bev_pre, Tensor(np.asarray(bev_mask).reshape(b, 1, 1)))
        emb, prompt_tokens = self.encode_tokens(feats, token_mask)
        tokens = concat([bev_tokens, prompt_tokens], axis=1)
        ego_feat, attn_all = self.decode(tokens)
        wp = self.waypoint_head(ego_feat)

        groups = {"bev": (0, cfg.n_bev_tokens)}
        for comp, (lo, hi) in component_token_slices(cfg).items():
            groups[comp] = (cfg.n_bev_tokens + lo, cfg.n_bev_tokens + hi)
        attention = np.stack([a.data[:, :, 0, :] for a in attn_all], axis=0)
        return PredictionResult(
            waypoints=wp.data.copy(), attention=attention, waypoints_t=wp,
            prompt_embeddings=emb, bev_tokens_pre=bev_pre, feature_maps=maps,
            token_groups=groups, fused_map=fused.data.copy())

    def warped_bank_slots(self, cur_pose):
        """Bank entries warped into the current frame, as forward_batch slots."""
        slots = []
        cur = np.asarray(cur_pose, dtype=np.float64).reshape(1, 3)
        for feat, pose in self.bank:
            warped = warp_feature_maps(feat[None], np.asarray(pose).reshape(1, 3),
                                       cur, self.extent)
            slots.append((warped, np.ones(1)))
        return slots

    def predict_step(self, prompt, bev, update_bank=True) -> PredictionResult:
        """Closed-loop single step: featurize, fuse against the memory bank,
        decode, and (by default) push the fused map into the bank."""
        feats, token_mask = featurize(prompt, self.cfg)
        feats = {k: v[None] for k, v in feats.items()}
        pose = np.asarray(prompt.ego_pose, dtype=np.float64)
        slots = self.warped_bank_slots(pose)
        bev_mask = np.array([prompt.presence.get("bev", 1.0)])
        res = self.forward_batch(feats, token_mask[None], bev.cells[None],
                                 warp_slots=slots, bev_mask=bev_mask)
        if update_bank:
            self.bank.append((res.fused_map[0].copy(), pose.copy()))
            if len(self.bank) > self.cfg.bank_capacity:
                self.bank.pop(0)
        res.waypoints = res.waypoints[0]
        return res
