"""Command-line entry point: ``mcsched <command> ...``.

Commands
--------
run        run a sweep from a YAML spec file or a built-in preset
plot       render sweep plots and summary CSVs from a results CSV
validate   check a schedule file against a coordination regime
instance   generate a network instance and save it as JSON
solve      solve one instance and print solver statistics as CSV
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .conflict import Regime, Schedule, build_graph, validate_schedule
from .distributed import run_heuristic_distributed, run_optimal_distributed
from .errors import SchedulingError, UsageError
from .experiment import PRESETS, ExperimentSpec, emit_plots, preset, read_results, run_experiment, summarize, summary_to_csv
from .mwis import brute_force_oracle, exact_mwis, greedy_mwis
from .network import ChannelParams, Dimensions, NetworkInstance, compute_utilities, generate_instance, load_config

STATS_HEADER = ("solver", "regime", "weight", "size", "feasible", "nodes", "pruned", "rounds", "messages", "wall_ms")
SOLVER_CHOICES = ("exact", "greedy", "oracle", "distributed-optimal", "distributed-heuristic")


def _dims(values) -> Dimensions:
    c, b, z, u = values
    return Dimensions(clouds=c, bs_per_cloud=b, pzs_per_bs=z, users=u)


def cmd_run(args: argparse.Namespace) -> int:
    if args.spec:
        spec = ExperimentSpec.load(args.spec)
        if args.paper_scale:
            raise UsageError("--paper-scale applies to presets; set dimensions in the spec file instead")
        changes = {}
        if args.seed is not None:
            changes["seeds"] = tuple(range(args.seed, args.seed + len(spec.seeds)))
        if args.budget is not None:
            changes["budget"] = args.budget
        if changes:
            spec = replace(spec, **changes)
    else:
        start = args.seed or 0
        spec = preset(args.preset, full_scale=args.paper_scale, budget=args.budget,
                      seeds=range(start, start + (args.seeds or 100)))
    if args.seeds is not None and args.spec:
        spec = replace(spec, seeds=tuple(range(spec.seeds[0], spec.seeds[0] + args.seeds)))
    out = Path(args.out) if args.out else spec.output or Path(f"results/{spec.name or 'sweep'}.csv")
    spec = replace(spec, output=out, timing=not args.no_timing, workers=args.workers)
    rows = run_experiment(spec)
    print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    sys.stdout.write(summary_to_csv(summarize(rows)))
    if args.plot:
        for path in emit_plots(rows, args.plot):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    rows = read_results(args.input)
    for path in emit_plots(rows, args.out or Path(args.input).parent):
        print(path)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    with open(args.schedule) as fh:
        data = json.load(fh)
    try:
        dims = Dimensions(**data["dims"])
        schedule = Schedule.of(data["associations"])
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{args.schedule}: expected 'dims' and 'associations' keys ({exc})") from None
    regime = Regime.parse(args.regime or data.get("regime", "hybrid"))
    verdict = validate_schedule(schedule, dims, regime)
    print(json.dumps({
        "regime": regime.value,
        "feasible": verdict.feasible,
        "violations": [{"kind": v.kind, "detail": v.detail} for v in verdict.violations],
    }, indent=2))
    return 0 if verdict.feasible else 1


def _instance(args: argparse.Namespace) -> NetworkInstance:
    if getattr(args, "instance", None):
        return NetworkInstance.load(args.instance)
    params, seed = (load_config(args.config) if args.config else (ChannelParams(), None))
    if args.seed is not None:
        seed = args.seed
    if args.dims is None:
        raise UsageError("give --instance or --dims C B Z U")
    return generate_instance(seed or 0, _dims(args.dims), params)


def cmd_instance(args: argparse.Namespace) -> int:
    inst = _instance(args)
    inst.save(args.out)
    print(f"wrote {inst.dims} (seed {inst.seed}) to {args.out}", file=sys.stderr)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _instance(args)
    utilities = compute_utilities(inst)
    regime = Regime.parse(args.regime)
    nodes = pruned = rounds = messages = ""
    if args.solver in ("distributed-optimal", "distributed-heuristic"):
        if regime is not Regime.HYBRID:
            raise UsageError("the distributed protocols run under the hybrid regime only")
        run = run_optimal_distributed if args.solver == "distributed-optimal" else run_heuristic_distributed
        result = run(utilities)
        rounds, messages, wall = result.rounds, len(result.messages), result.wall_ms
        if args.log:
            result.write_message_log(args.log)
    else:
        graph = build_graph(utilities, regime)
        if args.edges:
            graph.write_edge_list(args.edges)
        if args.solver == "exact":
            result = exact_mwis(graph)
        elif args.solver == "greedy":
            result = greedy_mwis(graph)
        else:
            result = brute_force_oracle(utilities, regime)
        nodes, pruned, wall = result.stats.nodes, result.stats.pruned, result.stats.wall_ms
    verdict = validate_schedule(result.schedule, inst.dims, regime)
    if args.schedule_out:
        with open(args.schedule_out, "w") as fh:
            json.dump({"dims": {"clouds": inst.dims.clouds, "bs_per_cloud": inst.dims.bs_per_cloud,
                                "pzs_per_bs": inst.dims.pzs_per_bs, "users": inst.dims.users},
                       "regime": regime.value, "associations": result.schedule.to_json()}, fh, indent=1)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(STATS_HEADER)
    writer.writerow([args.solver, regime.value, repr(result.weight), len(result.schedule),
                     "true" if verdict.feasible else "false", nodes, pruned, rounds, messages, f"{wall:.3f}"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcsched", description="Coordinated scheduling simulator for multi-cloud radio access networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a parameter sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="YAML experiment spec")
    src.add_argument("--preset", choices=PRESETS, help="built-in sweep")
    p.add_argument("--paper-scale", action="store_true", help="use the full-size preset (greedy and distributed solvers only)")
    p.add_argument("--seed", type=int, help="first seed of the trial range")
    p.add_argument("--seeds", type=int, help="number of seeds per point")
    p.add_argument("--budget", type=int, help="maximum vertex count handed to an exact solve")
    p.add_argument("--out", help="results CSV path")
    p.add_argument("--plot", metavar="DIR", help="also write plots to DIR")
    p.add_argument("--no-timing", action="store_true", help="leave wall_ms empty so reruns are byte-identical")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="plot a results CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="output directory (default: next to the CSV)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("validate", help="check a schedule file")
    p.add_argument("--schedule", required=True, help="JSON with 'dims', 'associations' and optional 'regime'")
    p.add_argument("--regime", choices=[r.value for r in Regime])
    p.set_defaults(func=cmd_validate)

    for name, func, help_ in (("instance", cmd_instance, "generate and save an instance"),
                              ("solve", cmd_solve, "solve one instance")):
        p = sub.add_parser(name, help=help_)
        if name == "solve":
            p.add_argument("--instance", help="saved instance JSON")
        p.add_argument("--dims", type=int, nargs=4, metavar=("C", "B", "Z", "U"))
        p.add_argument("--seed", type=int)
        p.add_argument("--config", help="YAML channel parameters")
        p.set_defaults(func=func)
    sub.choices["instance"].add_argument("--out", required=True)
    p.add_argument("--solver", choices=SOLVER_CHOICES, default="exact")
    p.add_argument("--regime", choices=[r.value for r in Regime], default="hybrid")
    p.add_argument("--log", help="JSONL message log (distributed solvers)")
    p.add_argument("--edges", help="write the conflict graph edge list here")
    p.add_argument("--schedule-out", help="write the schedule as JSON (validate --schedule input)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchedulingError, OSError, ValueError) as exc:
        print(f"mcsched: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
