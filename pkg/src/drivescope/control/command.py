"""Low-level actuation command."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ControlCommand:
    """steer in [-1, 1]; throttle, brake in [0, 1]; throttle*brake == 0."""

    steer: float = 0.0
    throttle: float = 0.0
    brake: float = 0.0

    def __post_init__(self):
        for name in ("steer", "throttle", "brake"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite control field {name}={v!r}")
        object.__setattr__(self, "steer", min(max(self.steer, -1.0), 1.0))
        object.__setattr__(self, "throttle", min(max(self.throttle, 0.0), 1.0))
        object.__setattr__(self, "brake", min(max(self.brake, 0.0), 1.0))
        if self.throttle > 0.0 and self.brake > 0.0:
            raise ValueError("throttle and brake are mutually exclusive")

    def as_dict(self):
        return {"steer": self.steer, "throttle": self.throttle, "brake": self.brake}

    @classmethod
    def from_dict(cls, d):
        return cls(steer=d["steer"], throttle=d["throttle"], brake=d["brake"])
