"""Command-line entry points.

    edgeprov serve  --port 8000 --scenario fixtures/scenarios/drone.json
    edgeprov run    --scenario ... --script ... --seed 42 --out result.json
    edgeprov models search --task object_detection --backend fixture
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .planner import make_default_planner
from .registry import FixtureRegistry, HubClient, ModelCatalog
from .runner import run_scenario
from .scenario import load_scenario

DEFAULT_FIXTURES = Path("fixtures/models")
DEFAULT_HUB = "https://huggingface.co"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgeprov")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the gateway HTTP server")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--scenario", required=True)
    serve.add_argument(
        "--realtime-ratio",
        type=float,
        default=0.0,
        help="advance sim time at this multiple of wall clock (0 = only explicit /sim/advance)",
    )
    serve.add_argument("--seed", type=int, default=None)
    serve.add_argument(
        "--ui-dir",
        default="frontend",
        help="directory with the built console (mounted at /ui when present)",
    )

    run = sub.add_parser("run", help="run a scripted scenario headlessly")
    run.add_argument("--scenario", required=True)
    run.add_argument("--script", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", required=True)

    models = sub.add_parser("models", help="model registry utilities")
    models_sub = models.add_subparsers(dest="models_command", required=True)
    search = models_sub.add_parser("search", help="search models by task tag")
    search.add_argument("--task", required=True)
    search.add_argument("--backend", choices=["hub", "fixture"], default="fixture")
    search.add_argument("--limit", type=int, default=10)
    search.add_argument("--fixture-dir", default=str(DEFAULT_FIXTURES))
    search.add_argument("--hub-url", default=DEFAULT_HUB)

    return parser


def cmd_serve(args) -> int:
    import uvicorn

    from .env import Environment
    from .gateway import create_app

    scenario = load_scenario(args.scenario)
    env = Environment(scenario, seed=args.seed, planner=make_default_planner())
    app = create_app(env, realtime_ratio=args.realtime_ratio or None, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_run(args) -> int:
    result, code = run_scenario(
        args.scenario,
        args.script,
        seed=args.seed,
        out_file=args.out,
        planner=make_default_planner(),
    )
    stage = result["exit"]["stage"]
    if code == 0:
        print(f"COMPLETE in {result['sim_time_ms']} ms simulated time; result: {args.out}")
    else:
        print(f"FAILED at stage {stage}; result: {args.out}", file=sys.stderr)
    return code


def cmd_models_search(args) -> int:
    if args.backend == "fixture":
        catalog = ModelCatalog(FixtureRegistry(args.fixture_dir))
    else:
        catalog = ModelCatalog(HubClient(args.hub_url))
    cards = catalog.search_models(args.task, args.limit)
    rows = [
        {
            "model_id": c.model_id,
            "downloads": c.downloads,
            "likes": c.likes,
            "size_mb": c.size_mb,
            "gpu_required": c.gpu_required,
        }
        for c in cards
    ]
    print(json.dumps(rows, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "models":
        return cmd_models_search(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
