"""Episode records and the line-delimited JSON log format.

One frame per planner tick (2 Hz): world snapshot, prompt, prediction,
control, and any infraction events since the previous planner tick. BEV
grids are not stored; they re-rasterize deterministically from the
snapshot and route.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model.prompt import PromptBundle
from ..control.command import ControlCommand
from ..sim.infractions import InfractionEvent
from ..sim.world import WorldState

SCHEMA_VERSION = 1


@dataclass
class Frame:
    tick: int                         # physics tick of the snapshot
    world: WorldState
    prompt: PromptBundle
    expert_waypoints: np.ndarray = None
    prediction: np.ndarray = None     # planner waypoints (T, 2) or None
    control: ControlCommand = None
    events: list = field(default_factory=list)

    def as_dict(self):
        return {
            "type": "frame",
            "tick": self.tick,
            "world": self.world.as_dict(),
            "prompt": self.prompt.as_dict(),
            "expert_waypoints": None if self.expert_waypoints is None else self.expert_waypoints.tolist(),
            "prediction": None if self.prediction is None else np.asarray(self.prediction).tolist(),
            "control": None if self.control is None else self.control.as_dict(),
            "events": [e.as_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tick=d["tick"],
            world=WorldState.from_dict(d["world"]),
            prompt=PromptBundle.from_dict(d["prompt"]),
            expert_waypoints=None if d.get("expert_waypoints") is None else np.array(d["expert_waypoints"]),
            prediction=None if d.get("prediction") is None else np.array(d["prediction"]),
            control=None if d.get("control") is None else ControlCommand.from_dict(d["control"]),
            events=[InfractionEvent.from_dict(e) for e in d.get("events", [])])


@dataclass
class EpisodeRecord:
    scenario_ref: str
    route_ref: str
    frames: list = field(default_factory=list)
    infractions: list = field(default_factory=list)
    terminated_reason: str = "unknown"
    seed: int = 0
    metrics: dict = None
    interventions: list = field(default_factory=list)  # serialized dicts

    def header_dict(self):
        return {"type": "header", "schema_version": SCHEMA_VERSION,
                "scenario": self.scenario_ref, "route": self.route_ref,
                "seed": self.seed, "interventions": self.interventions}

    def end_dict(self):
        return {"type": "end", "terminated_reason": self.terminated_reason,
                "infractions": [e.as_dict() for e in self.infractions],
                "metrics": self.metrics}


def write_episode(episode: EpisodeRecord, path):
    lines = [json.dumps(episode.header_dict())]
    lines.extend(json.dumps(f.as_dict()) for f in episode.frames)
    lines.append(json.dumps(episode.end_dict()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_episode(path) -> EpisodeRecord:
    frames = []
    header = None
    tail = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            if d["type"] == "header":
                if d.get("schema_version") != SCHEMA_VERSION:
                    raise ValueError(f"unsupported episode schema_version {d.get('schema_version')!r}")
                header = d
            elif d["type"] == "frame":
                frames.append(Frame.from_dict(d))
            elif d["type"] == "end":
                tail = d
    if header is None or tail is None:
        raise ValueError(f"episode log {path} missing header or end record")
    return EpisodeRecord(
        scenario_ref=header["scenario"], route_ref=header["route"],
        frames=frames,
        infractions=[InfractionEvent.from_dict(e) for e in tail.get("infractions", [])],
        terminated_reason=tail.get("terminated_reason", "unknown"),
        seed=header.get("seed", 0), metrics=tail.get("metrics"),
        interventions=header.get("interventions", []))
