from .world import AgentState, WorldState, step_world
from .road import RoadNetwork, Lane, TrafficLight, StopSign, LightColor
from .bev import BevGrid, rasterize_bev
from .infractions import InfractionEvent, InfractionKind, InfractionMonitor
from .metrics import DriveMetrics, compute_metrics
from .scenario import Scenario, load_scenario, save_scenario

__all__ = [
    "AgentState", "WorldState", "step_world",
    "RoadNetwork", "Lane", "TrafficLight", "StopSign", "LightColor",
    "BevGrid", "rasterize_bev",
    "InfractionEvent", "InfractionKind", "InfractionMonitor",
    "DriveMetrics", "compute_metrics",
    "Scenario", "load_scenario", "save_scenario",
]
