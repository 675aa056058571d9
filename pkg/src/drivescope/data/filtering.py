"""Dataset filtration: trim stopped tails, drop routes with infractions."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..config import SimConfig


@dataclass
class FiltrationReport:
    total_episodes: int = 0
    dropped_routes: int = 0
    kept_routes: int = 0
    truncated_frames: int = 0
    kept_frames: int = 0
    dropped_refs: list = field(default_factory=list)

    def as_dict(self):
        return {"total_episodes": self.total_episodes,
                "dropped_routes": self.dropped_routes,
                "kept_routes": self.kept_routes,
                "truncated_frames": self.truncated_frames,
                "kept_frames": self.kept_frames,
                "dropped_refs": list(self.dropped_refs)}


def filter_dataset(episodes, cfg: SimConfig = SimConfig()):
    """Returns (kept episodes, FiltrationReport).

    Truncation removes the maximal trailing run of frames with ego speed
    below the stopped threshold; an episode with any infraction is dropped
    whole. Idempotent.
    """
    report = FiltrationReport(total_episodes=len(episodes))
    kept = []
    for ep in episodes:
        if ep.infractions:
            report.dropped_routes += 1
            report.dropped_refs.append(ep.route_ref)
            continue
        cut = len(ep.frames)
        while cut > 0 and ep.frames[cut - 1].world.ego.speed < cfg.stop_speed:
            cut -= 1
        report.truncated_frames += len(ep.frames) - cut
        if cut == 0:
            report.dropped_routes += 1
            report.dropped_refs.append(ep.route_ref)
            continue
        if cut < len(ep.frames):
            ep = type(ep)(scenario_ref=ep.scenario_ref, route_ref=ep.route_ref,
                          frames=ep.frames[:cut], infractions=list(ep.infractions),
                          terminated_reason=ep.terminated_reason, seed=ep.seed,
                          metrics=ep.metrics)
        report.kept_routes += 1
        report.kept_frames += len(ep.frames)
        kept.append(ep)
    return kept, report
