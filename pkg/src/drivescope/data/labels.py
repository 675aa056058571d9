"""Imitation labels: future ego positions in the frame of an earlier tick."""
from __future__ import annotations

import numpy as np

from ..sim.geometry import SE2


def label_waypoints(episode, t_index: int, horizon: int) -> np.ndarray:
    """Ego positions at the next `horizon` planner ticks, expressed in the
    ego frame at frame `t_index`. Repeats the final pose if the episode
    ends early."""
    frames = episode.frames
    if not (0 <= t_index < len(frames)):
        raise IndexError(f"t_index {t_index} out of range for {len(frames)} frames")
    ego0 = frames[t_index].world.ego
    pose = SE2(ego0.x, ego0.y, ego0.yaw)
    out = np.zeros((horizon, 2))
    for k in range(horizon):
        j = min(t_index + 1 + k, len(frames) - 1)
        ego = frames[j].world.ego
        out[k] = pose.inverse_apply(np.array([[ego.x, ego.y]]))[0]
    return out
