"""Benchmark specs and closed-loop evaluation reports."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import (DEFAULT_PENALTIES, BevConfig, ModelConfig, PidConfig,
                      SimConfig, config_fingerprint)
from ..data.routes import load_route
from ..sim.scenario import load_scenario
from .loop import run_closed_loop

SCHEMA_VERSION = 1


@dataclass
class BenchmarkSpec:
    name: str
    category: str                     # SHORT or LONG
    entries: list                     # [{"scenario", "route", "seed", "expert_time"}]
    base_dir: Path = None

    def __post_init__(self):
        if self.category not in ("SHORT", "LONG"):
            raise ValueError(f"category must be SHORT or LONG, got {self.category!r}")
        if not self.entries:
            raise ValueError("benchmark needs at least one route")

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "name": self.name,
                "category": self.category,
                "entries": [{k: v for k, v in e.items()} for e in self.entries]}


def save_benchmark(spec: BenchmarkSpec, path):
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2))


def load_benchmark(path) -> BenchmarkSpec:
    path = Path(path)
    d = json.loads(path.read_text())
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported benchmark schema_version {d.get('schema_version')!r}")
    return BenchmarkSpec(name=d["name"], category=d["category"],
                         entries=d["entries"], base_dir=path.parent)


@dataclass
class EvalReport:
    benchmark: str
    per_route: list                   # [{"route", "rc", "is_score", "ds", ...}]
    mean_ds: float
    mean_rc: float
    mean_is: float
    infraction_histogram: dict
    config_fingerprint: str
    interventions: list = field(default_factory=list)

    def as_dict(self):
        return {"benchmark": self.benchmark, "per_route": self.per_route,
                "mean_ds": self.mean_ds, "mean_rc": self.mean_rc,
                "mean_is": self.mean_is,
                "infraction_histogram": self.infraction_histogram,
                "config_fingerprint": self.config_fingerprint,
                "interventions": self.interventions}

    def save(self, path):
        Path(path).write_text(json.dumps(self.as_dict(), indent=2))

    def csv_table(self):
        """Rows in (DS, RC, IS) column order."""
        lines = ["route,ds,rc,is"]
        for r in self.per_route:
            lines.append(f"{r['route']},{r['ds']:.2f},{r['rc']:.2f},{r['is_score']:.4f}")
        lines.append(f"mean,{self.mean_ds:.2f},{self.mean_rc:.2f},{self.mean_is:.4f}")
        return "\n".join(lines)


def run_benchmark(driver_factory, spec: BenchmarkSpec, interventions=(),
                  sim_cfg: SimConfig = SimConfig(),
                  model_cfg: ModelConfig = ModelConfig(),
                  penalties=None, verbose=False, episode_hook=None) -> EvalReport:
    """Evaluate a driver on every benchmark route.

    driver_factory(interventions) -> fresh driver per route. Failures on a
    route are recorded with reason and score zero rather than aborting the
    sweep.
    """
    base = spec.base_dir or Path(".")
    per_route = []
    hist: dict = {}
    for entry in spec.entries:
        scenario = load_scenario(base / entry["scenario"])
        route = load_route(base / entry["route"])
        budget = 2.0 * entry["expert_time"] if entry.get("expert_time") else None
        driver = driver_factory(interventions)
        try:
            episode, metrics = run_closed_loop(
                driver, scenario, route, seed=entry.get("seed", 0),
                sim_cfg=sim_cfg, model_cfg=model_cfg, penalties=penalties,
                time_budget=budget)
        except Exception as exc:  # noqa: BLE001 - record and continue
            per_route.append({"route": route.name, "rc": 0.0, "is_score": 0.0,
                              "ds": 0.0, "error": repr(exc)})
            continue
        row = {"route": route.name, "rc": metrics.rc, "is_score": metrics.is_score,
               "ds": metrics.ds, "terminated": episode.terminated_reason,
               "infractions": metrics.infraction_counts}
        per_route.append(row)
        for k, v in metrics.infraction_counts.items():
            hist[k] = hist.get(k, 0) + v
        if episode_hook is not None:
            episode_hook(entry, episode, metrics)
        if verbose:
            print(f"[bench] {route.name}: ds={metrics.ds:.1f} rc={metrics.rc:.1f} "
                  f"is={metrics.is_score:.2f} ({episode.terminated_reason})", flush=True)
    mean_ds = float(np.mean([r["ds"] for r in per_route]))
    mean_rc = float(np.mean([r["rc"] for r in per_route]))
    mean_is = float(np.mean([r["is_score"] for r in per_route]))
    return EvalReport(
        benchmark=spec.name, per_route=per_route, mean_ds=mean_ds,
        mean_rc=mean_rc, mean_is=mean_is, infraction_histogram=hist,
        config_fingerprint=config_fingerprint(sim_cfg, model_cfg),
        interventions=[iv.as_dict() if hasattr(iv, "as_dict") else iv
                       for iv in interventions])
