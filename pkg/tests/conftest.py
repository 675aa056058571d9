import numpy as np
import pytest

from drivescope.config import ModelConfig
from drivescope.data.routes import route_from_lanes
from drivescope.sim import maps


@pytest.fixture(scope="session")
def straight_scene():
    scn = maps.straight_map(length=300.0)
    route = route_from_lanes(scn.network, ["main"], seed=0, name="straight_r")
    return scn, route


@pytest.fixture(scope="session")
def grid_scene():
    return maps.grid_town(seed=3)


@pytest.fixture(scope="session")
def small_model_cfg():
    # desk-test scale: tiny but structurally identical
    return ModelConfig(d=32, n_layers=2, n_heads=2, ffn_hidden=64,
                       conv_channels=(8, 16, 32), se_hidden=8)


def random_prompt(rng, cfg: ModelConfig = ModelConfig()):
    """A structurally valid random PromptBundle."""
    from drivescope.model.prompt import PromptBundle
    n_lights = cfg.n_traffic_lights
    lights = np.zeros((n_lights, 4))
    lights[:, 0] = rng.uniform(5, 60, size=n_lights)
    for i in range(n_lights):
        lights[i, 1 + rng.integers(3)] = 1.0
    return PromptBundle(
        routing_points=rng.normal(0, 10, size=(cfg.n_routing_points, 2)),
        target_point=np.array([rng.uniform(5, 60), rng.normal(0, 5), rng.uniform(-1, 1)]),
        command=int(rng.integers(6)),
        current_speed=float(rng.uniform(0, 8)),
        prev_speeds=rng.uniform(0, 8, size=cfg.n_prev_speeds),
        map_vectors=rng.normal(0, 10, size=(cfg.n_map_segments, 5)),
        map_present=np.ones(cfg.n_map_segments),
        obstacles=rng.normal(0, 5, size=(cfg.n_obstacles, 7)),
        obstacles_present=(rng.random(cfg.n_obstacles) < 0.6).astype(float),
        stop_signs=rng.uniform(0, 1, size=(cfg.n_stop_signs, 2)),
        traffic_lights=lights,
        light_ids=[f"tl{i}" for i in range(n_lights)],
        presence={c: 1.0 for c in ("routing", "target_point", "command",
                                   "current_speed", "prev_speeds", "map",
                                   "obstacles", "stop_signs", "traffic_lights", "bev")},
        ego_pose=(float(rng.normal(0, 50)), float(rng.normal(0, 50)),
                  float(rng.uniform(-np.pi, np.pi))),
        tick=0)
