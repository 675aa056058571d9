"""SE(2) warping of ego-frame feature maps between capture poses."""
from __future__ import annotations

import numpy as np


def feature_cell_centers(h, w, extent):
    """Ego-frame centers of an h x w feature grid covering `extent`
    (x_min, x_max, y_min, y_max); rows index forward x."""
    x_min, x_max, y_min, y_max = extent
    res_x = (x_max - x_min) / h
    res_y = (y_max - y_min) / w
    xs = x_min + (np.arange(h) + 0.5) * res_x
    ys = y_min + (np.arange(w) + 0.5) * res_y
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx, gy], axis=-1)   # (h, w, 2)


def warp_feature_maps(feats, from_poses, to_poses, extent):
    """Resample feature maps captured at `from_poses` into the frames of
    `to_poses` (both (B, 3) x/y/yaw). Bilinear; out-of-view cells zero.

    feats: (B, h, w, c). Returns the same shape.
    """
    feats = np.asarray(feats, dtype=np.float64)
    from_poses = np.asarray(from_poses, dtype=np.float64).reshape(-1, 3)
    to_poses = np.asarray(to_poses, dtype=np.float64).reshape(-1, 3)
    b, h, w, c = feats.shape
    x_min, x_max, y_min, y_max = extent
    res_x = (x_max - x_min) / h
    res_y = (y_max - y_min) / w

    centers = feature_cell_centers(h, w, extent).reshape(-1, 2)   # (hw, 2)

    # current-frame cell -> world -> capture frame
    cos_t, sin_t = np.cos(to_poses[:, 2]), np.sin(to_poses[:, 2])
    wx = (to_poses[:, 0, None] + centers[None, :, 0] * cos_t[:, None]
          - centers[None, :, 1] * sin_t[:, None])
    wy = (to_poses[:, 1, None] + centers[None, :, 0] * sin_t[:, None]
          + centers[None, :, 1] * cos_t[:, None])
    cos_f, sin_f = np.cos(from_poses[:, 2]), np.sin(from_poses[:, 2])
    dx = wx - from_poses[:, 0, None]
    dy = wy - from_poses[:, 1, None]
    ox = dx * cos_f[:, None] + dy * sin_f[:, None]
    oy = -dx * sin_f[:, None] + dy * cos_f[:, None]

    # continuous grid coordinates in the capture map
    fi = (ox - x_min) / res_x - 0.5
    fj = (oy - y_min) / res_y - 0.5
    i0 = np.floor(fi).astype(np.int64)
    j0 = np.floor(fj).astype(np.int64)
    ti = fi - i0
    tj = fj - j0

    out = np.zeros((b, h * w, c))
    batch_idx = np.repeat(np.arange(b)[:, None], h * w, axis=1)
    for di in (0, 1):
        for dj in (0, 1):
            ii = i0 + di
            jj = j0 + dj
            valid = (ii >= 0) & (ii < h) & (jj >= 0) & (jj < w)
            wgt = (ti if di else 1.0 - ti) * (tj if dj else 1.0 - tj)
            wgt = np.where(valid, wgt, 0.0)
            ii_c = np.clip(ii, 0, h - 1)
            jj_c = np.clip(jj, 0, w - 1)
            out += wgt[:, :, None] * feats[batch_idx, ii_c, jj_c, :]
    return out.reshape(b, h, w, c)
