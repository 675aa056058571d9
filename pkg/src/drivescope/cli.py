"""Umbrella CLI: collect, filter, train, evaluate, ablate, attribute,
actmap, serve, plus asset generation."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _add_collect(sub):
    p = sub.add_parser("collect", help="roll out the expert and record a dataset")
    p.add_argument("--scenario-dir", required=True)
    p.add_argument("--routes", type=int, default=10, help="routes per scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--min-length", type=float, default=240.0)
    p.add_argument("--max-length", type=float, default=400.0)


def _add_filter(sub):
    p = sub.add_parser("filter", help="truncate stopped tails, drop infraction routes")
    p.add_argument("--in", dest="src", required=True)
    p.add_argument("--out", required=True)


def _add_train(sub):
    p = sub.add_parser("train", help="train the planner on a filtered dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="JSON with train/model overrides")
    p.add_argument("--out", required=True, help="checkpoint path (.npz)")


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="closed-loop benchmark evaluation")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--bench", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--intervene", default=None, help="JSON file with interventions")
    p.add_argument("--csv", default=None, help="optional CSV table (DS, RC, IS)")


def _add_ablate(sub):
    p = sub.add_parser("ablate", help="zero-ablate one component over a benchmark")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--bench", required=True)
    p.add_argument("--component", required=True)
    p.add_argument("--out", default=None)


def _add_attribute(sub):
    p = sub.add_parser("attribute", help="token-gradient/attention series for an episode")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--episode", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--route", required=True)
    p.add_argument("--out", required=True)


def _add_actmap(sub):
    p = sub.add_parser("actmap", help="gradient-weighted activation maps for an episode")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--episode", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--route", required=True)
    p.add_argument("--layer", default="fused")
    p.add_argument("--tick", type=int, default=None)
    p.add_argument("--out", required=True)


def _add_serve(sub):
    import os
    p = sub.add_parser("serve", help="run the HTTP debug service")
    p.add_argument("--asset-root", default=None,
                   help="defaults to $DRIVESCOPE_ASSET_ROOT or ./assets")
    bind = os.environ.get("DRIVESCOPE_BIND", "127.0.0.1:8008")
    host, _, port = bind.partition(":")
    p.add_argument("--host", default=host or "127.0.0.1")
    p.add_argument("--port", type=int, default=int(port or 8008))
    p.add_argument("--static", default=None, help="built UI directory to serve at /")


def _add_make_assets(sub):
    p = sub.add_parser("make-assets", help="generate bundled maps/scenarios/benchmarks")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="drivescope")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_collect, _add_filter, _add_train, _add_evaluate, _add_ablate,
                _add_attribute, _add_actmap, _add_serve, _add_make_assets):
        add(sub)
    args = parser.parse_args(argv)
    return COMMANDS[args.command](args)


def cmd_collect(args):
    from .data.collect import collect_dataset
    scenarios = sorted(Path(args.scenario_dir).glob("*.json"))
    if not scenarios:
        print(f"no scenario files under {args.scenario_dir}", file=sys.stderr)
        return 2
    collect_dataset(scenarios, args.out, routes_per_scenario=args.routes,
                    seed=args.seed, min_length=args.min_length,
                    max_length=args.max_length)
    return 0


def cmd_filter(args):
    from .data.collect import filter_dataset_dir
    filter_dataset_dir(args.src, args.out)
    return 0


def cmd_train(args):
    import dataclasses
    from .config import ModelConfig, TrainConfig
    from .model.train import train_planner
    model_cfg = ModelConfig()
    train_cfg = TrainConfig()
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        model_cfg = dataclasses.replace(model_cfg, **overrides.get("model", {}))
        train_cfg = dataclasses.replace(train_cfg, **overrides.get("train", {}))
    train_planner(args.data, model_cfg, train_cfg, out_path=args.out)
    print(f"checkpoint written to {args.out}")
    return 0


def _model_driver_factory(ckpt_path):
    from .control.loop import ModelDriver
    from .model.network import Planner
    from .model.params import load_checkpoint

    params, cfg, _ = load_checkpoint(ckpt_path)

    def factory(interventions=()):
        return ModelDriver(Planner(params=params, cfg=cfg),
                           interventions=interventions)
    return factory, cfg


def cmd_evaluate(args):
    from .causality.interventions import Intervention
    from .control.benchmark import load_benchmark, run_benchmark
    spec = load_benchmark(args.bench)
    factory, model_cfg = _model_driver_factory(args.ckpt)
    interventions = ()
    if args.intervene:
        docs = json.loads(Path(args.intervene).read_text())
        interventions = tuple(Intervention.from_dict(d) for d in docs)
    report = run_benchmark(factory, spec, interventions=interventions,
                           model_cfg=model_cfg, verbose=True)
    report.save(args.out)
    if args.csv:
        Path(args.csv).write_text(report.csv_table() + "\n")
    print(f"mean ds={report.mean_ds:.2f} rc={report.mean_rc:.2f} "
          f"is={report.mean_is:.3f} -> {args.out}")
    return 0


def cmd_ablate(args):
    from .causality.ablation import ablate_component
    from .control.benchmark import load_benchmark
    spec = load_benchmark(args.bench)
    factory, model_cfg = _model_driver_factory(args.ckpt)
    result = ablate_component(factory, spec, args.component, model_cfg=model_cfg,
                              verbose=True)
    doc = result.as_dict()
    print(json.dumps(doc, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2))
    return 0


def _load_replay_inputs(args):
    from .data.episode import read_episode
    from .data.routes import load_route
    from .model.network import Planner
    from .model.params import load_checkpoint
    from .sim.scenario import load_scenario
    params, cfg, _ = load_checkpoint(args.ckpt)
    return (read_episode(args.episode), Planner(params=params, cfg=cfg),
            load_scenario(args.scenario), load_route(args.route))


def cmd_attribute(args):
    from .causality.replay import replay_analysis
    episode, planner, scenario, route = _load_replay_inputs(args)
    bundle = replay_analysis(episode, planner, scenario, route, include_maps=False)
    Path(args.out).write_text(json.dumps(bundle))
    print(f"{len(bundle['ticks'])} ticks -> {args.out}")
    return 0


def cmd_actmap(args):
    from .causality.replay import replay_analysis
    episode, planner, scenario, route = _load_replay_inputs(args)
    ticks = None if args.tick is None else [args.tick]
    bundle = replay_analysis(episode, planner, scenario, route,
                             layer=args.layer, ticks=ticks, include_maps=True)
    Path(args.out).write_text(json.dumps(bundle))
    print(f"{len(bundle['activation_maps'])} maps -> {args.out}")
    return 0


def cmd_serve(args):
    import uvicorn
    from .service.app import create_app
    app = create_app(asset_root=args.asset_root, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_make_assets(args):
    from .assets import build_all
    out = build_all(args.out, seed=args.seed, quick=args.quick)
    print(json.dumps(out, indent=2))
    return 0


COMMANDS = {
    "collect": cmd_collect,
    "filter": cmd_filter,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "attribute": cmd_attribute,
    "actmap": cmd_actmap,
    "serve": cmd_serve,
    "make-assets": cmd_make_assets,
}


if __name__ == "__main__":
    sys.exit(main())
