"""Acceptance criteria, one test per criterion, printing a PASS line each.

The trained-model criteria build (or reuse) the full artifact chain under
DRIVESCOPE_ACCEPTANCE_ROOT (default <repo>/.acceptance): bundled assets,
an expert dataset of >= 5,000 filtered frames, and the desk checkpoint.
First build takes ~45 min on 2 cores; later runs are cached.
"""
import json
import os
from pathlib import Path

import numpy as np
import pytest

from drivescope.autodiff import Tensor, backward, check_gradients, matmul, reshape, tsum
from drivescope.causality.ablation import ablate_component
from drivescope.causality.actmap import activation_map
from drivescope.causality.attention import head_response_single
from drivescope.causality.gradients import token_gradients
from drivescope.causality.interventions import Intervention, apply_intervention
from drivescope.config import ModelConfig
from drivescope.control.benchmark import load_benchmark, run_benchmark
from drivescope.control.loop import ModelDriver, run_closed_loop
from drivescope.model.network import Planner, PredictionResult
from drivescope.model.params import load_checkpoint
from drivescope.model.prompt import ALL_COMPONENTS, component_token_slices, featurize
from drivescope.sim.bev import rasterize_bev

from conftest import random_prompt

REPO = Path(__file__).resolve().parents[1]
ROOT = Path(os.environ.get("DRIVESCOPE_ACCEPTANCE_ROOT", REPO / ".acceptance"))

SMALL = ModelConfig(d=32, n_layers=2, n_heads=2, ffn_hidden=64,
                    conv_channels=(8, 16, 32), se_hidden=8)


def ok(name, detail=""):
    print(f"\nACCEPTANCE {name}: PASS {detail}")


# ---------------------------------------------------------------- artifacts

@pytest.fixture(scope="session")
def artifacts():
    from drivescope.pipeline import build
    return build(ROOT, quick=False, force=False, verbose=True)


@pytest.fixture(scope="session")
def trained(artifacts):
    params, cfg, meta = load_checkpoint(artifacts["ckpt"])

    def factory(interventions=()):
        return ModelDriver(Planner(params=params, cfg=cfg),
                           interventions=interventions)

    return {"params": params, "cfg": cfg, "factory": factory,
            "assets": Path(artifacts["assets"]), "data": Path(artifacts["data"])}


_reports = {}


def short_baseline(trained):
    if "short" not in _reports:
        spec = load_benchmark(trained["assets"] / "benchmarks" / "short10.json")
        _reports["short"] = (spec, run_benchmark(trained["factory"], spec,
                                                 model_cfg=trained["cfg"]))
    return _reports["short"]


# ------------------------------------------------------------ cheap criteria

def test_gradient_correctness_primitives_and_full_graph():
    """diff-engine fd suite: every primitive plus the full planner graph,
    max relative error < 1e-5 over >= 200 sampled coordinates."""
    from test_autodiff import PRIMITIVES
    worst = 0.0
    rng = np.random.default_rng(0)
    for name, fn, shapes in PRIMITIVES:
        xs = [rng.normal(size=s) + 0.1 * np.sign(rng.normal(size=s)) for s in shapes]
        err = check_gradients(fn, xs, n_samples=12, rng=rng)
        assert err < 1e-5, f"primitive {name}: {err}"
        worst = max(worst, err)

    planner = Planner(cfg=SMALL, seed=0)
    prompt = random_prompt(rng, SMALL)
    feats0, tm = featurize(prompt, SMALL)
    comp_names = sorted(feats0)
    slot = rng.normal(size=(1, 12, 12, SMALL.d)) * 0.2
    proj = rng.normal(size=(SMALL.waypoints, 2))

    def full_graph(leaves):
        grids = leaves[0]
        feats = {c: reshape(leaf, (1,) + feats0[c].shape)
                 for c, leaf in zip(comp_names, leaves[1:])}
        res = planner.forward_batch(feats, tm[None], reshape(grids, (1, 96, 96, 6)),
                                    warp_slots=[(slot, np.ones(1))])
        return tsum(res.waypoints_t * Tensor(proj[None]))

    inputs = [rng.random((96, 96, 6))] + [feats0[c] for c in comp_names]
    err = check_gradients(full_graph, inputs, n_samples=208, rng=rng)
    assert err < 1e-5, f"full planner graph: {err}"
    ok("gradient-correctness", f"(primitives worst {worst:.2e}, full graph {err:.2e})")


def test_activation_map_oracle():
    """Closed-form linear oracle to < 1e-12 absolute; F >= 0 on 1,000
    random models/inputs."""
    a_val = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1)
    a = Tensor(a_val, requires_grad=True)
    wx = np.array([[0.5, -1.0], [2.0, 0.25]])
    wy = np.array([[-0.5, 1.5], [1.0, -2.0]])
    from drivescope.autodiff import concat
    px = tsum(a[:, :, :, 0] * Tensor(wx[None]), axis=(1, 2))
    py = tsum(a[:, :, :, 0] * Tensor(wy[None]), axis=(1, 2))
    wp = reshape(concat([px, py], axis=0), (1, 1, 2))
    res = PredictionResult(waypoints=wp.data, attention=np.zeros((1, 1, 1, 1)),
                           waypoints_t=wp, feature_maps={"fused": a})
    am = activation_map(res, layer="fused", display_shape=None)
    expected = np.sqrt((wx.mean() * a_val[0, :, :, 0]) ** 2
                       + (wy.mean() * a_val[0, :, :, 0]) ** 2)
    assert np.abs(am.values - expected).max() < 1e-12

    rng = np.random.default_rng(1)
    for trial in range(1000):
        c = int(rng.integers(1, 5))
        h = int(rng.integers(2, 5))
        a = Tensor(rng.normal(size=(1, h, h, c)), requires_grad=True)
        w = Tensor(rng.normal(size=(c, 2)))
        wp = reshape(matmul(tsum(a, axis=(1, 2)), w), (1, 1, 2))
        res = PredictionResult(waypoints=wp.data, attention=np.zeros((1, 1, 1, 1)),
                               waypoints_t=wp, feature_maps={"m": a})
        am = activation_map(res, layer="m", display_shape=None)
        assert (am.values >= 0.0).all()
    ok("activation-map-oracle")


def test_attention_partition():
    """Attention rows sum to 1 +- 1e-9 over 1,000 random forward passes;
    HeadResponse per-head component sums to 1 +- 1e-6."""
    rng = np.random.default_rng(2)
    planner = Planner(cfg=SMALL, seed=0)
    worst_row = 0.0
    worst_head = 0.0
    for trial in range(1000):
        if trial % 100 == 0:
            planner = Planner(cfg=SMALL, seed=trial)
        tokens = Tensor(rng.normal(size=(1, 173, SMALL.d)))
        _, attn_all = planner.decode(tokens)
        for a in attn_all:
            worst_row = max(worst_row, float(np.abs(a.data.sum(-1) - 1.0).max()))
            assert a.data.min() >= 0.0
    assert worst_row <= 1e-9
    for trial in range(50):
        prompt = random_prompt(rng, SMALL)
        feats, tm = featurize(prompt, SMALL)
        res = planner.forward_batch({k: v[None] for k, v in feats.items()},
                                    tm[None], rng.random((1, 96, 96, 6)))
        hr = head_response_single(res)
        worst_head = max(worst_head, float(np.abs(hr.response.sum(1) - 1.0).max()))
    assert worst_head <= 1e-6
    ok("attention-partition", f"(row err {worst_row:.1e}, head err {worst_head:.1e})")


def test_metric_arithmetic():
    """DS = RC x IS reproduces the published baseline arithmetic."""
    ds = 99.26 * 0.96
    assert abs(ds - 95.2896) < 1e-12
    assert abs(round(ds, 2) - 95.30) <= 0.01
    ok("metric-arithmetic", f"(99.26 x 0.96 = {ds:.4f} ~ 95.30)")


def test_masking_equivalence():
    """ZERO_COMPONENT at input equals internal token zeroing: waypoint
    difference exactly 0, all components, 100 random inputs."""
    rng = np.random.default_rng(3)
    planner = Planner(cfg=SMALL, seed=4)
    slices = component_token_slices(SMALL)
    checked = 0
    for trial in range(100):
        prompt = random_prompt(rng, SMALL)
        grid_cells = rng.random((96, 96, 6))

        class G:
            cells = grid_cells

            def copy(self):
                import copy as _c
                g = G()
                g.cells = grid_cells.copy()
                return g

        comp = ALL_COMPONENTS[trial % len(ALL_COMPONENTS)]
        p_iv, _ = apply_intervention(prompt, None, Intervention(
            kind="ZERO_COMPONENT", component=comp))
        feats_iv, tm_iv = featurize(p_iv, SMALL)
        bm_iv = np.array([p_iv.presence.get("bev", 1.0)])
        r1 = planner.forward_batch({k: v[None] for k, v in feats_iv.items()},
                                   tm_iv[None], grid_cells[None], bev_mask=bm_iv)
        feats, tm = featurize(prompt, SMALL)
        tm = tm.copy()
        bm = np.ones(1)
        if comp == "bev":
            bm = np.zeros(1)
        else:
            lo, hi = slices[comp]
            tm[lo:hi] = 0.0
        r2 = planner.forward_batch({k: v[None] for k, v in feats.items()},
                                   tm[None], grid_cells[None], bev_mask=bm)
        assert np.array_equal(r1.waypoints, r2.waypoints), comp
        checked += 1
    assert checked == 100
    ok("masking-equivalence", "(10 components x 100 inputs, diff = 0)")


def test_filtration_bookkeeping():
    """Injected-infraction corpus: dropped/truncated counts match ground
    truth exactly."""
    from drivescope.data.filtering import filter_dataset
    from test_labels_filtering import episode_from_poses
    from drivescope.sim.infractions import InfractionEvent, InfractionKind

    rng = np.random.default_rng(4)
    episodes = []
    want_drop = 0
    want_trunc = 0
    for i in range(60):
        moving = int(rng.integers(4, 30))
        stopped = int(rng.integers(0, 12))
        bad = rng.random() < 0.3
        poses = [(k * 1.0, 0.0, 0.0) for k in range(moving + stopped)]
        speeds = [4.0] * moving + [0.0] * stopped
        ev = ([InfractionEvent(InfractionKind.OFF_ROAD, 1, (0, 0))] if bad else [])
        ep = episode_from_poses(poses, speeds=speeds, events=ev)
        ep.route_ref = f"r{i}"
        episodes.append(ep)
        if bad:
            want_drop += 1
        else:
            want_trunc += stopped
    kept, report = filter_dataset(episodes)
    assert report.dropped_routes == want_drop
    assert report.truncated_frames == want_trunc
    assert report.kept_routes == 60 - want_drop
    assert report.kept_frames == sum(len(e.frames) for e in kept)
    twice, r2 = filter_dataset(kept)
    assert r2.dropped_routes == 0 and r2.truncated_frames == 0
    ok("filtration-bookkeeping",
       f"(dropped {want_drop}, truncated {want_trunc}, idempotent)")


def test_determinism_logs_and_analysis(tmp_path):
    """Identical seeds reproduce episode logs and analysis documents
    bit-for-bit."""
    from drivescope.data.episode import write_episode
    from drivescope.data.expert import run_expert
    from drivescope.data.routes import route_from_lanes
    from drivescope.causality.replay import replay_analysis
    from drivescope.sim import maps

    scn = maps.light_corridor_map(light_at=60.0, length=140.0)
    route = route_from_lanes(scn.network, ["main"], seed=0)
    blobs = []
    for run in range(2):
        ep, _ = run_expert(scn, route, seed=7)
        p = tmp_path / f"ep{run}.jsonl"
        write_episode(ep, p)
        blobs.append(p.read_bytes())
    assert blobs[0] == blobs[1]

    docs = []
    for run in range(2):
        planner = Planner(cfg=SMALL, seed=2)
        driver = ModelDriver(planner)
        ep, _ = run_closed_loop(driver, scn, route, seed=7, max_planner_ticks=5)
        bundle = replay_analysis(ep, planner, scn, route)
        docs.append(json.dumps(bundle, sort_keys=True))
    assert docs[0] == docs[1]
    ok("determinism", "(episode logs and analysis documents bit-for-bit)")


# ---------------------------------------------------- trained-model criteria

def test_desk_scale_training(trained):
    """>= 5,000 filtered frames; mean DS >= 70 and RC >= 85 on the held-out
    10-route SHORT benchmark."""
    manifest = json.loads((trained["data"] / "manifest.json").read_text())
    n_frames = manifest["counts"]["frames"]
    assert n_frames >= 5000
    spec, report = short_baseline(trained)
    assert len(spec.entries) == 10
    assert report.mean_ds >= 70.0, report.as_dict()
    assert report.mean_rc >= 85.0, report.as_dict()
    ok("desk-scale-training",
       f"({n_frames} frames; DS {report.mean_ds:.1f}, RC {report.mean_rc:.1f})")


SEVERE = ("routing", "target_point", "bev", "traffic_lights")
MILD = ("map", "command", "stop_signs", "prev_speeds")


def test_table1_ordering(trained):
    """Severity ordering of component ablations matches the published
    pattern: navigation/BEV/lights severe, map/command/signs/history mild,
    obstacles measurable on obstacle-rich routes."""
    spec, baseline = short_baseline(trained)
    lines = []
    for comp in SEVERE:
        r = ablate_component(trained["factory"], spec, comp,
                             baseline_report=baseline, model_cfg=trained["cfg"])
        lines.append(f"{comp} dDS={r.delta_ds:+.1f}")
        assert r.delta_ds <= -20.0, f"{comp}: {r.as_dict()}"
    for comp in MILD:
        r = ablate_component(trained["factory"], spec, comp,
                             baseline_report=baseline, model_cfg=trained["cfg"])
        lines.append(f"{comp} dDS={r.delta_ds:+.1f}")
        assert abs(r.delta_ds) < 10.0, f"{comp}: {r.as_dict()}"
    ob_spec = load_benchmark(trained["assets"] / "benchmarks" / "obstacle6.json")
    ob_base = run_benchmark(trained["factory"], ob_spec, model_cfg=trained["cfg"])
    r = ablate_component(trained["factory"], ob_spec, "obstacles",
                         baseline_report=ob_base, model_cfg=trained["cfg"])
    lines.append(f"obstacles dIS={r.delta_is:+.3f}")
    assert r.delta_is < 0.0, r.as_dict()
    ok("table1-ordering", "(" + ", ".join(lines) + ")")


def _staged_entries(trained, name):
    doc = json.loads((trained["assets"] / "staged" / name).read_text())
    return doc["entries"]


def test_counterfactual_red_light(trained):
    """SET_LIGHT green->red upstream stops the ego before the line in
    >= 90% of 20 staged scenarios."""
    from drivescope.data.routes import load_route
    from drivescope.sim.scenario import load_scenario

    entries = _staged_entries(trained, "lights.json")
    assert len(entries) == 20
    stopped = 0
    crossed_baseline = 0
    for e in entries:
        scn = load_scenario(trained["assets"] / e["scenario"])
        route = load_route(trained["assets"] / e["route"])
        line_x = e["stop_line_x"]
        iv = Intervention(kind="SET_LIGHT", light_id=e["light_id"], color=0)
        driver = trained["factory"]((iv,))
        budget_ticks = int((line_x / 2.0 + 25.0) / 0.5)
        ep, _ = run_closed_loop(driver, scn, route, seed=0,
                                model_cfg=trained["cfg"],
                                max_planner_ticks=budget_ticks)
        xs = [f.world.ego.x for f in ep.frames]
        final = ep.frames[-1].world.ego
        if max(xs) < line_x and final.speed < 0.5 and final.x < line_x:
            stopped += 1
        base = trained["factory"](())
        ep_b, _ = run_closed_loop(base, scn, route, seed=0,
                                  model_cfg=trained["cfg"],
                                  max_planner_ticks=budget_ticks)
        if max(f.world.ego.x for f in ep_b.frames) > line_x:
            crossed_baseline += 1
    assert stopped >= 18, f"stopped {stopped}/20"
    assert crossed_baseline >= 16, f"baseline crossed only {crossed_baseline}/20"
    ok("counterfactual-red-light", f"({stopped}/20 stop, {crossed_baseline}/20 baseline cross)")


def test_counterfactual_speed_span(trained):
    """SET_SPEED(0) shrinks the predicted waypoint span versus SET_SPEED(10)."""
    from drivescope.data.routes import load_route
    from drivescope.sim.scenario import load_scenario

    entries = _staged_entries(trained, "lights.json")[:8]
    spans = {0.0: [], 10.0: []}
    for e in entries:
        scn = load_scenario(trained["assets"] / e["scenario"])
        route = load_route(trained["assets"] / e["route"])
        driver = trained["factory"](())
        ep, _ = run_closed_loop(driver, scn, route, seed=0,
                                model_cfg=trained["cfg"], max_planner_ticks=12)
        frame = ep.frames[-1]
        planner = Planner(params=trained["params"], cfg=trained["cfg"])
        bev = rasterize_bev(frame.world, route, scn.network)
        for v in (0.0, 10.0):
            p_iv, b_iv = apply_intervention(frame.prompt, bev,
                                            Intervention(kind="SET_SPEED", speed=v))
            res = planner.predict_step(p_iv, b_iv, update_bank=False)
            wp = res.waypoints
            spans[v].append(float(np.linalg.norm(wp[-1] - wp[0])))
    mean0 = float(np.mean(spans[0.0]))
    mean10 = float(np.mean(spans[10.0]))
    assert mean0 < mean10, (mean0, mean10)
    ok("counterfactual-speed-span", f"(span@0 {mean0:.2f} m < span@10 {mean10:.2f} m)")


def test_counterfactual_fork_control(trained):
    """Moving the target alone rarely changes route choice (< 30%); moving
    target and routing together controls it (>= 80%)."""
    from drivescope.data.routes import load_route
    from drivescope.sim.scenario import load_scenario

    entries = _staged_entries(trained, "forks.json")
    assert len(entries) == 10
    changed = {"target_only": 0, "both": 0}
    for e in entries:
        scn = load_scenario(trained["assets"] / e["scenario"])
        route = load_route(trained["assets"] / e["route"])
        mt = Intervention(kind="MOVE_TARGET", target=tuple(e["alt_target"]))
        rr = Intervention(kind="REPLACE_ROUTING",
                          routing=tuple(tuple(p) for p in e["alt_routing"]))
        ticks = int((e["fork_s"] + 45.0) / 2.0 / 0.5)
        for mode, ivs in (("target_only", (mt,)), ("both", (mt, rr))):
            driver = trained["factory"](ivs)
            ep, _ = run_closed_loop(driver, scn, route, seed=0,
                                    model_cfg=trained["cfg"],
                                    max_planner_ticks=ticks)
            final = np.array([ep.frames[-1].world.ego.x, ep.frames[-1].world.ego.y])
            d_a = np.linalg.norm(final - np.array(e["exit_a"]))
            d_b = np.linalg.norm(final - np.array(e["exit_b"]))
            if d_b < d_a:
                changed[mode] += 1
    assert changed["target_only"] < 0.3 * len(entries), changed
    assert changed["both"] >= 0.8 * len(entries), changed
    ok("counterfactual-fork-control",
       f"(target-only {changed['target_only']}/10, both {changed['both']}/10)")


def test_counterfactual_map_noise_robustness(trained):
    """MAP_NOISE(sigma <= 1 m) moves DS by < 5 points."""
    spec, baseline = short_baseline(trained)
    iv = Intervention(kind="MAP_NOISE", sigma=1.0, seed=5)
    noised = run_benchmark(trained["factory"], spec, interventions=(iv,),
                           model_cfg=trained["cfg"])
    delta = noised.mean_ds - baseline.mean_ds
    assert abs(delta) < 5.0, (baseline.mean_ds, noised.mean_ds)
    ok("counterfactual-map-noise", f"(dDS {delta:+.2f})")
