"""Route completion, infraction score, and driving score."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import DEFAULT_PENALTIES, SimConfig
from .geometry import polyline_arclength, project_to_polyline


@dataclass
class DriveMetrics:
    rc: float                         # percent of route completed, [0, 100]
    is_score: float                   # product of penalty coefficients, [0, 1]
    ds: float                         # rc * is_score
    infraction_counts: dict = field(default_factory=dict)

    def as_dict(self):
        return {"rc": self.rc, "is_score": self.is_score, "ds": self.ds,
                "infraction_counts": dict(self.infraction_counts)}

    @classmethod
    def from_dict(cls, d):
        return cls(rc=d["rc"], is_score=d["is_score"], ds=d["ds"],
                   infraction_counts=dict(d["infraction_counts"]))


def driving_score(rc: float, is_score: float) -> float:
    return rc * is_score


class ProgressTracker:
    """Monotone route progress: max projected arclength while within the
    deviation corridor."""

    def __init__(self, routing, cfg: SimConfig = SimConfig()):
        self.routing = np.asarray(routing, dtype=np.float64)
        self.total = float(polyline_arclength(self.routing)[-1])
        if self.total <= 0:
            raise ValueError("zero-length route")
        self.cfg = cfg
        self.s_max = 0.0

    def update(self, position) -> float:
        s, lateral, _ = project_to_polyline(self.routing, position)
        if lateral <= self.cfg.deviation_threshold:
            self.s_max = max(self.s_max, float(s))
        return self.s_max

    def mark_complete(self):
        self.s_max = self.total

    @property
    def completed(self) -> bool:
        return self.total - self.s_max <= self.cfg.completion_tolerance

    @property
    def rc(self) -> float:
        return 100.0 * self.s_max / self.total


def infraction_score(events, penalties=None) -> float:
    penalties = penalties if penalties is not None else DEFAULT_PENALTIES
    score = 1.0
    for ev in events:
        kind = ev.kind.value if hasattr(ev.kind, "value") else str(ev.kind)
        score *= penalties.get(kind, 1.0)
    return min(max(score, 0.0), 1.0)


def compute_metrics(episode, route, penalties=None, cfg: SimConfig = SimConfig()) -> DriveMetrics:
    """Metrics for a finished episode: rc from projected progress, is from
    the penalty product, ds = rc * is."""
    if not episode.frames:
        raise ValueError("empty episode")
    routing = np.asarray(route.routing, dtype=np.float64)
    tracker = ProgressTracker(routing, cfg)
    for frame in episode.frames:
        ego = frame.world.ego
        tracker.update((ego.x, ego.y))
    if episode.terminated_reason == "completed":
        tracker.mark_complete()
    rc = tracker.rc
    is_score = infraction_score(episode.infractions, penalties)
    counts: dict = {}
    for ev in episode.infractions:
        kind = ev.kind.value if hasattr(ev.kind, "value") else str(ev.kind)
        counts[kind] = counts.get(kind, 0) + 1
    return DriveMetrics(rc=rc, is_score=is_score, ds=rc * is_score, infraction_counts=counts)
