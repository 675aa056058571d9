"""Attention-head component responses from the recorded decoder weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model.prompt import ALL_COMPONENTS


@dataclass
class HeadResponse:
    response: np.ndarray              # (heads, n_components) per-head softmax mass
    components: tuple                 # column order
    avg: dict = None                  # component -> time-averaged mean response
    tick: int = 0

    def as_dict(self):
        out = {"tick": self.tick, "components": list(self.components),
               "response": self.response.tolist()}
        if self.avg is not None:
            out["avg"] = {k: float(v) for k, v in self.avg.items()}
        return out


def head_response_single(result, layer=-1, layer_mean=False, sample=0) -> HeadResponse:
    """Per-head attention mass over each component's tokens.

    Uses the final decoder layer by default; `layer_mean` averages layers
    instead. Component masses partition each head's softmax row, so rows
    sum to one per head.
    """
    attn = result.attention            # (layers, B, heads, n_tokens)
    rows = attn.mean(axis=0) if layer_mean else attn[layer]
    rows = rows[sample]                # (heads, n_tokens)
    comps = tuple(ALL_COMPONENTS)
    resp = np.zeros((rows.shape[0], len(comps)))
    for ci, comp in enumerate(comps):
        lo, hi = result.token_groups[comp]
        resp[:, ci] = rows[:, lo:hi].sum(axis=1)
    return HeadResponse(response=resp, components=comps)


def attention_response(results, window=None, layer=-1, layer_mean=False) -> list:
    """HeadResponse per tick over a window of PredictionResults, each
    annotated with the window's running time-average curve."""
    if not isinstance(results, (list, tuple)):
        results = [results]
    if window is not None:
        results = results[-window:]
    per_tick = []
    acc = None
    for i, res in enumerate(results):
        hr = head_response_single(res, layer=layer, layer_mean=layer_mean)
        mean_over_heads = hr.response.mean(axis=0)
        acc = mean_over_heads if acc is None else acc + mean_over_heads
        hr.tick = i
        per_tick.append(hr)
    avg = acc / len(per_tick)
    for hr in per_tick:
        hr.avg = {c: float(avg[i]) for i, c in enumerate(hr.components)}
    return per_tick
