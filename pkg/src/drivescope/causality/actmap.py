"""Gradient-weighted activation maps over recorded feature maps.

Channel weights are the spatial average of the gradient of the summed
waypoint coordinate per direction; the map is the elementwise L2 norm of
the two direction-weighted channel sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import backward, grad_of


@dataclass
class ChannelWeights:
    alpha_x: np.ndarray               # (channels,)
    alpha_y: np.ndarray

    def as_dict(self):
        return {"alpha_x": self.alpha_x.tolist(), "alpha_y": self.alpha_y.tolist()}


@dataclass
class ActivationMap:
    values: np.ndarray                # (H', W') >= 0
    layer: str
    tick: int = 0
    upsampled: np.ndarray = None      # (H, W) display copy, nearest-neighbor
    weights: ChannelWeights = None
    extent: tuple = None              # ego-frame (x_min, x_max, y_min, y_max)

    def as_dict(self):
        return {"tick": self.tick, "layer": self.layer,
                "values": self.values.tolist(),
                "upsampled": None if self.upsampled is None else self.upsampled.tolist(),
                "extent": None if self.extent is None else list(self.extent)}


def _nearest_upsample(arr, out_h, out_w):
    h, w = arr.shape
    ri = (np.arange(out_h) * h) // out_h
    ci = (np.arange(out_w) * w) // out_w
    return arr[ri][:, ci]


def activation_map(result, layer: str = "fused", tick: int = 0,
                   display_shape=(96, 96), extent=None, sample=0) -> ActivationMap:
    """Gradient-weighted activation map for a recorded feature map.

    alpha_k^c = mean_ij d(sum_t w_t[c]) / dA^k_ij, then
    F = sqrt((sum_k alpha_k^x A^k)^2 + (sum_k alpha_k^y A^k)^2).
    """
    if layer not in result.feature_maps:
        raise KeyError(f"unknown feature map {layer!r}; have {sorted(result.feature_maps)}")
    fmap = result.feature_maps[layer]
    a = fmap.data[sample]              # (H', W', C)
    wp = result.waypoints_t
    sums = []
    alphas = []
    for c in (0, 1):
        seed = np.zeros(wp.shape)
        seed[:, :, c] = 1.0
        grads = backward(wp, seed=seed)
        ga = grad_of(grads, fmap)[sample]          # (H', W', C)
        alpha = ga.mean(axis=(0, 1))               # 1/Z sum_ij
        alphas.append(alpha)
        sums.append((a * alpha).sum(axis=-1))      # sum_k alpha_k A^k
    values = np.sqrt(sums[0] ** 2 + sums[1] ** 2)
    up = _nearest_upsample(values, *display_shape) if display_shape else None
    return ActivationMap(values=values, layer=layer, tick=tick, upsampled=up,
                         weights=ChannelWeights(alpha_x=alphas[0], alpha_y=alphas[1]),
                         extent=extent)
