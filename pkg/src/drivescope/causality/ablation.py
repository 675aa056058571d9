"""Component zero-ablation over a closed-loop benchmark."""
from __future__ import annotations

from dataclasses import dataclass

from ..control.benchmark import BenchmarkSpec, run_benchmark
from ..model.prompt import ALL_COMPONENTS
from .interventions import Intervention


@dataclass
class AblationResult:
    component: str
    baseline: dict                    # mean ds/rc/is
    ablated: dict
    delta_ds: float
    delta_rc: float
    delta_is: float
    report: object = None

    def as_dict(self):
        return {"component": self.component, "baseline": self.baseline,
                "ablated": self.ablated, "delta_ds": self.delta_ds,
                "delta_rc": self.delta_rc, "delta_is": self.delta_is}


def ablate_component(driver_factory, spec: BenchmarkSpec, component: str,
                     baseline_report=None, **kwargs) -> AblationResult:
    """Benchmark with ZERO_COMPONENT(component) applied at every planner
    tick, beside the baseline."""
    if component not in ALL_COMPONENTS:
        raise ValueError(f"unknown component {component!r}")
    if baseline_report is None:
        baseline_report = run_benchmark(driver_factory, spec, interventions=(), **kwargs)
    iv = Intervention(kind="ZERO_COMPONENT", component=component)
    ablated = run_benchmark(driver_factory, spec, interventions=(iv,), **kwargs)
    base = {"ds": baseline_report.mean_ds, "rc": baseline_report.mean_rc,
            "is": baseline_report.mean_is}
    abl = {"ds": ablated.mean_ds, "rc": ablated.mean_rc, "is": ablated.mean_is}
    return AblationResult(
        component=component, baseline=base, ablated=abl,
        delta_ds=abl["ds"] - base["ds"], delta_rc=abl["rc"] - base["rc"],
        delta_is=abl["is"] - base["is"], report=ablated)
