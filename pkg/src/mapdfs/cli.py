"""Command-line entry point: ``mapdfs <subcommand> ...``.

Exit codes: 0 success, 1 validation failure, 2 protocol or trace
violation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import trace_from_jsonl, trace_to_jsonl
from .graph import GraphError, load_environment, validate
from .harness import export_plot_data, load_scenario, metrics_from_results, run_scenario, validate_trace
from .layouts import BUNDLED, load_bundled
from .orientation import DEFAULT_ORIENTATION_SEED, OrientedEnvironment, dump_oriented, load_oriented, orient_main_area
from .planning import NoPathError, Planner

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3


class _IOFailure(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from None


def _load_env_data(source: str) -> dict:
    if source in BUNDLED and not Path(source).exists():
        return load_bundled(source).to_dict()
    try:
        return json.loads(_read(source))
    except json.JSONDecodeError as exc:
        raise GraphError(f"{source}: invalid JSON: {exc}") from None


def _oriented(source: str, seed: int) -> OrientedEnvironment:
    """Oriented environment from an oriented file, or by orienting a plain one."""
    data = _load_env_data(source)
    if any(e.get("direction") in ("a_to_b", "b_to_a") for e in data.get("edges", []) if isinstance(e, dict)):
        return load_oriented(data)
    return orient_main_area(load_environment(data), seed)


def cmd_validate(args) -> int:
    graph = load_environment(_load_env_data(args.env))
    report = validate(graph, args.agents)
    if args.json:
        print(json.dumps(report.to_dict(), indent=1))
    else:
        print(graph)
        print("\n".join(report.lines()))
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_orient(args) -> int:
    graph = load_environment(_load_env_data(args.env))
    oriented = orient_main_area(graph, args.seed)
    _write(Path(args.output), dump_oriented(oriented) + "\n")
    print(f"oriented {len(oriented.arcs)} main-area edges -> {args.output}")
    return EXIT_OK


def cmd_plan(args) -> int:
    env = _oriented(args.env, args.seed)
    try:
        path = Planner(env).shortest_path(args.start, args.goal)
    except NoPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(" ".join(map(str, path)))
    print(f"{len(path) - 1} hop(s)")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(
        scenario, trials=args.trials, seed=args.seed, full=args.full,
        keep_results=args.traces, workers=args.workers,
    )
    for m in result.metrics:
        mk = "-" if m.makespan_mean is None else f"{m.makespan_mean:.1f}"
        print(
            f"n={m.n_agents:3d} nu={m.nu:.2f} t_lu={m.t_lu}  completion={m.completion_rate:.2f}  "
            f"makespan={mk}  planning={m.planning_time_mean:.4f}s  violations={m.violations}"
        )
    for cell in result.skipped:
        print(f"skipped n={cell['n_agents']}: {cell['reason']}")
    if args.out:
        out = Path(args.out)
        _write(out / "results.json", json.dumps(result.to_dict(), indent=1) + "\n")
        _write(out / "metrics.csv", export_plot_data(result.metrics))
        env = orient_main_area(scenario.load_environment(), scenario.orientation_seed)
        _write(out / "oriented_env.json", dump_oriented(env) + "\n")
        if args.traces:
            for rec in result.trials:
                name = f"trace_n{rec.n_agents}_nu{rec.nu}_tlu{rec.t_lu}_s{rec.seed}.jsonl"
                _write(out / "traces" / name, trace_to_jsonl(rec.result.trace))
    bad = any(r.violations or (r.failure_reason or "").startswith("protocol") for r in result.trials)
    if bad:
        return EXIT_VIOLATION
    return EXIT_INVALID if result.skipped else EXIT_OK


def cmd_check_trace(args) -> int:
    env = _oriented(args.env, args.seed)
    try:
        trace = trace_from_jsonl(_read(args.trace))
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"error: malformed trace: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate_trace(trace, env)
    for v in report:
        print(v)
    print(f"{len(trace)} events, {len(report)} violation(s)")
    return EXIT_OK if report.clean else EXIT_VIOLATION


def cmd_export(args) -> int:
    data = json.loads(_read(args.results))
    metrics = metrics_from_results(data)
    text = export_plot_data(metrics, format=args.format)
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mapdfs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the structural and agent-count conditions")
    s.add_argument("env", help="environment file or bundled name (env1..env4)")
    s.add_argument("-n", "--agents", type=int, default=0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("orient", help="write a strongly oriented environment file")
    s.add_argument("env")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--seed", type=int, default=DEFAULT_ORIENTATION_SEED)
    s.set_defaults(func=cmd_orient)

    s = sub.add_parser("plan", help="print the planner's path between two nodes")
    s.add_argument("env")
    s.add_argument("start", type=int)
    s.add_argument("goal", type=int)
    s.add_argument("--seed", type=int, default=DEFAULT_ORIENTATION_SEED, help="orientation seed for plain files")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("run", help="run a scenario (exp1..exp4 or a JSON file)")
    s.add_argument("scenario")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--full", action="store_true", help="use the full agent grid and trial count")
    s.add_argument("--out")
    s.add_argument("--traces", action="store_true", help="also write every trial's trace (needs --out)")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("check-trace", help="replay a trace file and report collisions")
    s.add_argument("trace")
    s.add_argument("env")
    s.add_argument("--seed", type=int, default=DEFAULT_ORIENTATION_SEED)
    s.set_defaults(func=cmd_check_trace)

    s = sub.add_parser("export", help="convert a results file into plot data")
    s.add_argument("results")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
