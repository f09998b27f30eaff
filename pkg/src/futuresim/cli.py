"""Command line entry points: batch runs, the HTTP service, log replay and
metric export."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import policies  # noqa: F401  (registers bundled scripted policies)
from .gateway import load_backends_file
from .metrics import export_tables, growth_rate
from .records import read_record_log
from .replay import export_graph, persist_and_replay
from .scenario import ScenarioError, load_scenario


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2

    overrides = load_backends_file(args.backends) if args.backends else None

    os.makedirs(args.out, exist_ok=True)
    base_seed = scenario.engine_config.rng_seed if args.seed is None else args.seed
    reference = scenario.reference
    watch = [reference["watch_agent"]] if "watch_agent" in reference else []
    growths = []
    for i in range(args.repeat):
        seed = base_seed + i
        log_path = os.path.join(args.out, f"{scenario.name}-r{i}.jsonl")
        runner = scenario.build(seed=seed, ablation=args.ablation,
                                records_path=log_path,
                                deterministic=args.deterministic,
                                gateway=scenario.make_gateway(overrides))
        records = runner.run()
        records.close()
        export_dir = os.path.join(args.out, f"{scenario.name}-r{i}-metrics")
        export_tables(records, export_dir, watch_agents=watch, reference=reference)
        growth = growth_rate(records, reference.get("growth_rate"))
        growths.append(growth)
        print(f"run {i}: seed={seed} frames={runner.current_frame} "
              f"increase={growth['increase']:+.2%} log={log_path}")

    aggregate = {
        "scenario": scenario.name,
        "repeats": args.repeat,
        "seed_base": base_seed,
        "ablation": args.ablation or scenario.ablation or "none",
        "mean_increase": sum(g["increase"] for g in growths) / len(growths),
        "runs": growths,
    }
    if all("relative_error" in g for g in growths):
        aggregate["mean_relative_error"] = sum(
            g["relative_error"] for g in growths) / len(growths)
        aggregate["reference_increase"] = reference.get("growth_rate")
    out_path = os.path.join(args.out, f"{scenario.name}-aggregate.json")
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"aggregate report: {out_path}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import make_app

    app = make_app(run_dir=args.run_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    result = persist_and_replay(args.log)
    print(f"applied {result.events_applied} events; "
          f"frames settled: {result.state.frames_settled}")
    if result.truncated:
        print(f"log truncated at line {result.bad_line}: {result.error}")
    for agent, snap in result.final_accounts().items():
        print(f"  {agent}: cash={snap['cash_cents'] / 100:.2f} "
              f"position={snap['position']} pnl={snap['realized_pnl_cents'] / 100:.2f}")
    if args.graph:
        export_graph(read_record_log(args.log).events, args.graph)
        print(f"interaction graph written to {args.graph}")
    return 1 if result.truncated else 0


def _cmd_export(args: argparse.Namespace) -> int:
    read = read_record_log(args.log)
    if read.truncated:
        print(f"warning: log truncated at line {read.bad_line}", file=sys.stderr)
    watch = args.watch or []
    files = export_tables(read.events, args.out, watch_agents=watch)
    for path in files:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="futuresim",
        description="Agent-based futures market simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario headless to completion")
    run.add_argument("scenario", help="path to a .scenario.json file")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed (repeats use seed+i)")
    run.add_argument("--ablation", choices=["no_expert", "no_generator", "both"],
                     default=None)
    run.add_argument("--repeat", type=int, default=1, metavar="N",
                     help="number of runs with consecutive seeds")
    run.add_argument("--deterministic", action="store_true", default=True,
                     help="serialize agents in id order with per-agent seeds (default)")
    run.add_argument("--out", default="out", help="artifact directory")
    run.add_argument("--backends", default=os.environ.get("FUTURESIM_BACKENDS"),
                     help="JSON file of backend specs overriding the scenario's")
    run.set_defaults(func=_cmd_run)

    serve = sub.add_parser("serve", help="start the HTTP/WebSocket service")
    serve.add_argument("--host", default=os.environ.get("FUTURESIM_BIND", "127.0.0.1"))
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get("FUTURESIM_PORT", "8000")))
    serve.add_argument("--run-dir",
                       default=os.environ.get("FUTURESIM_RUN_DIR", "runs"))
    serve.set_defaults(func=_cmd_serve)

    replay = sub.add_parser("replay", help="reconstruct state from a record log")
    replay.add_argument("log", help="path to a .jsonl record log")
    replay.add_argument("--graph", default=None,
                        help="also export the interaction graph to this path")
    replay.set_defaults(func=_cmd_replay)

    export = sub.add_parser("export", help="write metric tables from a record log")
    export.add_argument("log")
    export.add_argument("--out", default="exports")
    export.add_argument("--watch", action="append", default=None,
                        help="agent id to export per-agent series for (repeatable)")
    export.set_defaults(func=_cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
