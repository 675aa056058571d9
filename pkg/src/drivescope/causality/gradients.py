"""Token-gradient attribution: per-component L2 norms of the gradients of
the summed waypoint x and y coordinates with respect to token embeddings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import backward, grad_of, tsum
from ..model.prompt import ALL_COMPONENTS


@dataclass
class TokenAttribution:
    g_x: dict                         # component -> float >= 0
    g_y: dict
    tick: int = 0

    def as_dict(self):
        return {"tick": self.tick,
                "g_x": {k: float(v) for k, v in self.g_x.items()},
                "g_y": {k: float(v) for k, v in self.g_y.items()}}


def _direction_norms(result, grads, offsetless_groups):
    """L2 norm over each component's pre-mask embedding gradient rows."""
    n_bev = result.bev_tokens_pre.shape[1]
    g_prompt = grad_of(grads, result.prompt_embeddings)
    g_bev = grad_of(grads, result.bev_tokens_pre)
    out = {}
    for comp, (lo, hi) in offsetless_groups.items():
        if comp == "bev":
            rows = g_bev
        else:
            rows = g_prompt[:, lo - n_bev:hi - n_bev, :]
        out[comp] = float(np.sqrt(np.sum(rows * rows)))
    return out


def token_gradients(result, tick: int = 0) -> TokenAttribution:
    """Attribution for one forward pass (a PredictionResult with live graph).

    Backward runs once per direction from p^c = sum_t waypoint_t[c]; the
    component value is the L2 norm over every embedding coordinate of that
    component's tokens. Masked components come out exactly zero because the
    mask multiplies downstream of the watched embeddings.
    """
    wp = result.waypoints_t
    b = wp.shape[0]
    gx = {}
    gy = {}
    for c, store in ((0, gx), (1, gy)):
        seed = np.zeros(wp.shape)
        seed[:, :, c] = 1.0
        grads = backward(wp, seed=seed)
        store.update(_direction_norms(result, grads, result.token_groups))
    missing = [c for c in ALL_COMPONENTS if c not in gx]
    if missing:
        raise ValueError(f"prediction lacks token groups for {missing}")
    return TokenAttribution(g_x=gx, g_y=gy, tick=tick)
