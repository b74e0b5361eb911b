"""Experiment scenarios, trial aggregation and the post-hoc trace oracle."""

from __future__ import annotations

import csv
import io
import json
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .engine import InstanceResult, SimConfig, TraceEvent, run_instance, trace_to_jsonl
from .graph import EnvironmentGraph, load_environment, validate
from .layouts import BUNDLED, load_bundled
from .orientation import DEFAULT_ORIENTATION_SEED, OrientedEnvironment, orient_main_area

__all__ = [
    "MalformedTraceError",
    "Violation",
    "CollisionReport",
    "validate_trace",
    "Scenario",
    "load_scenario",
    "bundled_scenarios",
    "AggregateMetrics",
    "TrialRecord",
    "ScenarioResult",
    "run_scenario",
    "aggregate",
    "export_plot_data",
    "PLOT_COLUMNS",
]


# --------------------------------------------------------------------------
# trace oracle
#
# Deliberately shares nothing with the protocol: it only looks at the
# recorded depart/arrive events and the graph's adjacency and directions.


class MalformedTraceError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    t: int
    agents: tuple[int, ...]
    where: str

    def __str__(self):
        return f"t={self.t} {self.kind} agents={list(self.agents)} at {self.where}"


@dataclass
class CollisionReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


_INF = float("inf")


def _overlaps(intervals: list[tuple[float, float, int]]):
    """Yield (t, agent_a, agent_b) for overlapping half-open intervals of different agents."""
    intervals = sorted(intervals)
    active: list[tuple[float, int]] = []
    for start, end, agent in intervals:
        active = [(e, a) for e, a in active if e > start]
        for e, a in active:
            if a != agent:
                yield start, a, agent
        active.append((end, agent))


def validate_trace(trace: list[TraceEvent], env: OrientedEnvironment) -> CollisionReport:
    """Replay ``trace`` and list every collision or illegal move.

    Checks: one agent per node at any time; no opposite traversals of an
    undirected edge with overlapping transit; no directed edge used
    backwards; at most one non-parked agent inside each tree.
    """
    base = env.base
    report = CollisionReport()
    position: dict[int, int | None] = {}
    since: dict[int, int] = {}
    transit: dict[int, tuple[int, int, int]] = {}
    node_iv: dict[int, list] = defaultdict(list)
    edge_iv: dict[tuple[int, int], list] = defaultdict(list)

    for ev in sorted(trace, key=lambda e: e.t):
        a = ev.agent
        if ev.kind == "arrive":
            if ev.src is None and ev.dst is None:
                if a in position:
                    raise MalformedTraceError(f"agent {a} placed twice")
                if ev.node not in base.nodes:
                    raise MalformedTraceError(f"agent {a} placed on unknown node {ev.node}")
                position[a], since[a] = ev.node, ev.t
                continue
            if a not in transit:
                raise MalformedTraceError(f"t={ev.t}: agent {a} arrives without departing")
            u, v, d = transit.pop(a)
            if (ev.src, ev.dst) != (u, v) or ev.t <= d:
                raise MalformedTraceError(f"t={ev.t}: agent {a} arrival does not match its departure")
            edge_iv[(u, v)].append((d, ev.t, a))
            position[a], since[a] = v, ev.t
        elif ev.kind == "depart":
            if position.get(a) is None or a in transit:
                raise MalformedTraceError(f"t={ev.t}: agent {a} departs while not on a node")
            u, v = ev.src, ev.dst
            if u != position[a]:
                raise MalformedTraceError(f"t={ev.t}: agent {a} departs from {u} but is at {position[a]}")
            key = (u, v) if u < v else (v, u)
            if key not in base.edges:
                report.violations.append(Violation("no_such_edge", ev.t, (a,), f"{u}->{v}"))
            elif key in env.arcs and env.arcs[key] != (u, v):
                report.violations.append(Violation("backward_traversal", ev.t, (a,), f"{u}->{v}"))
            node_iv[u].append((since[a], ev.t, a))
            position[a] = None
            transit[a] = (u, v, ev.t)
    for a, v in position.items():
        if v is not None:
            node_iv[v].append((since[a], _INF, a))
    for a, (u, v, d) in transit.items():
        edge_iv[(u, v)].append((d, _INF, a))

    for v, ivs in sorted(node_iv.items()):
        for t, x, y in _overlaps(ivs):
            report.violations.append(Violation("node_collision", int(t), (x, y), f"node {v}"))

    for (u, v), ivs in sorted(edge_iv.items()):
        if u > v:
            continue
        key = (u, v)
        if key in env.arcs:
            continue
        back = edge_iv.get((v, u), [])
        for d1, a1, x in ivs:
            for d2, a2, y in back:
                if max(d1, d2) < min(a1, a2):
                    report.violations.append(
                        Violation("opposite_traversal", int(max(d1, d2)), (x, y), f"edge {u}-{v}")
                    )

    # tree exclusivity, parked agents (sitting on parking nodes) exempt
    for k, tree in enumerate(base.trees):
        inside = []
        for v in tree.marginal:
            if base.nodes[v].is_parking:
                continue
            inside.extend(node_iv.get(v, ()))
        for (u, v), ivs in edge_iv.items():
            if u in tree.marginal or v in tree.marginal:
                inside.extend(ivs)
        for t, x, y in _overlaps(_merge_per_agent(inside)):
            report.violations.append(Violation("tree_crowded", int(t), (x, y), f"tree rooted at {tree.root}"))

    report.violations.sort(key=lambda w: (w.t, w.kind, w.agents))
    return report


def _merge_per_agent(intervals):
    by_agent = defaultdict(list)
    for s, e, a in intervals:
        by_agent[a].append((s, e))
    merged = []
    for a, ivs in by_agent.items():
        ivs.sort()
        cur_s, cur_e = ivs[0]
        for s, e in ivs[1:]:
            if s <= cur_e:
                cur_e = max(cur_e, e)
            else:
                merged.append((cur_s, cur_e, a))
                cur_s, cur_e = s, e
        merged.append((cur_s, cur_e, a))
    return merged


# --------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class Scenario:
    name: str
    environment: str
    agents: tuple[int, ...]
    t_lu: tuple[int, ...] = (3,)
    nu: tuple[float, ...] = (0.0,)
    trials: int = 10
    seed: int = 0
    n_tasks: int = 100
    timestep_limit: int = 10000
    t_mv: int = 3
    orientation_seed: int = DEFAULT_ORIENTATION_SEED
    full_agents: tuple[int, ...] = ()
    full_trials: int = 50
    description: str = ""
    base_dir: str | None = None

    def load_environment(self) -> EnvironmentGraph:
        if self.environment in BUNDLED:
            return load_bundled(self.environment)
        path = Path(self.environment)
        if not path.is_absolute() and self.base_dir:
            path = Path(self.base_dir) / path
        return load_environment(path.read_text())

    def cells(self, full: bool = False):
        agents = self.full_agents if (full and self.full_agents) else self.agents
        for t_lu in self.t_lu:
            for nu in self.nu:
                for n in agents:
                    yield n, nu, t_lu

    def config(self, n_agents: int, nu: float, t_lu: int, seed: int) -> SimConfig:
        return SimConfig(
            n_agents=n_agents,
            n_tasks=self.n_tasks,
            t_mv=self.t_mv,
            t_lu=t_lu,
            nu=nu,
            timestep_limit=self.timestep_limit,
            seed=seed,
        )


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario by bundled name (``exp1`` ... ``exp4``) or from a JSON file."""
    text = None
    base_dir = None
    name = str(source)
    bundled = resources.files("mapdfs") / "data" / "scenarios" / f"{name}.json"
    if not name.endswith(".json") and bundled.is_file():
        text = bundled.read_text()
    else:
        path = Path(source)
        text = path.read_text()
        base_dir = str(path.parent)
    data = json.loads(text)
    for key in ("agents", "t_lu", "nu", "full_agents"):
        if key in data:
            data[key] = tuple(data[key])
    data["base_dir"] = base_dir
    return Scenario(**data)


def bundled_scenarios() -> list[str]:
    folder = resources.files("mapdfs") / "data" / "scenarios"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


@dataclass(frozen=True)
class AggregateMetrics:
    n_agents: int
    nu: float
    t_lu: int
    trials: int
    completed: int
    completion_rate: float
    makespan_mean: float | None
    planning_time_mean: float
    violations: int = 0


@dataclass
class TrialRecord:
    n_agents: int
    nu: float
    t_lu: int
    seed: int
    completed: bool
    makespan: int | None
    planning_time: float
    violations: int
    failure_reason: str | None
    result: InstanceResult | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("result")
        return d


@dataclass
class ScenarioResult:
    scenario: Scenario
    metrics: list[AggregateMetrics]
    trials: list[TrialRecord]
    skipped: list[dict]

    def to_dict(self) -> dict:
        sc = asdict(self.scenario)
        sc.pop("base_dir")
        return {
            "scenario": sc,
            "metrics": [asdict(m) for m in self.metrics],
            "trials": [t.to_dict() for t in self.trials],
            "skipped": self.skipped,
        }


def _run_trial(args) -> TrialRecord:
    env, cfg, keep = args
    result = run_instance(env, cfg)
    report = validate_trace(result.trace, env)
    completed = result.completed and report.clean
    reason = result.failure_reason
    if result.completed and not report.clean:
        reason = f"trace oracle: {report.violations[0]}"
    return TrialRecord(
        n_agents=cfg.n_agents,
        nu=cfg.nu,
        t_lu=cfg.t_lu,
        seed=cfg.seed,
        completed=completed,
        makespan=result.makespan if completed else None,
        planning_time=result.planning_time,
        violations=len(report),
        failure_reason=reason,
        result=result if keep else None,
    )


def aggregate(trials: list[TrialRecord]) -> list[AggregateMetrics]:
    """Fold trial records into one row per (n_agents, nu, t_lu) cell, in first-seen order."""
    cells: dict[tuple, list[TrialRecord]] = {}
    for rec in trials:
        cells.setdefault((rec.n_agents, rec.nu, rec.t_lu), []).append(rec)
    rows = []
    for (n, nu, t_lu), recs in cells.items():
        done = [r for r in recs if r.completed]
        rows.append(
            AggregateMetrics(
                n_agents=n,
                nu=nu,
                t_lu=t_lu,
                trials=len(recs),
                completed=len(done),
                completion_rate=len(done) / len(recs),
                makespan_mean=statistics.fmean(r.makespan for r in done) if done else None,
                planning_time_mean=statistics.fmean(r.planning_time for r in recs),
                violations=sum(r.violations for r in recs),
            )
        )
    return rows


def run_scenario(
    scenario: Scenario,
    trials: int | None = None,
    seed: int | None = None,
    full: bool = False,
    keep_results: bool = False,
    workers: int = 1,
) -> ScenarioResult:
    """Run every valid cell of ``scenario``; trial ``i`` uses seed ``seed + i``."""
    graph = scenario.load_environment()
    env = orient_main_area(graph, scenario.orientation_seed)
    n_trials = trials if trials is not None else (scenario.full_trials if full else scenario.trials)
    base_seed = scenario.seed if seed is None else seed
    jobs, skipped = [], []
    for n, nu, t_lu in scenario.cells(full):
        report = validate(graph, n)
        if not report.ok:
            skipped.append(
                {"n_agents": n, "nu": nu, "t_lu": t_lu,
                 "reason": "; ".join(line for line in report.lines() if "FAIL" in line)}
            )
            continue
        for i in range(n_trials):
            jobs.append((env, scenario.config(n, nu, t_lu, base_seed + i), keep_results))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_trial, jobs))
    else:
        records = [_run_trial(job) for job in jobs]
    return ScenarioResult(scenario, aggregate(records), records, skipped)


PLOT_COLUMNS = ("n_agents", "nu", "t_lu", "completion_rate", "makespan_mean", "planning_time_mean")


def export_plot_data(metrics: list[AggregateMetrics], path: str | Path | None = None, format: str = "csv") -> str:
    """Write the plot table as CSV or JSON; returns the text (also written to ``path`` if given)."""
    rows = [{c: getattr(m, c) for c in PLOT_COLUMNS} for m in metrics]
    if format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=PLOT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    elif format == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {format!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def metrics_from_results(data: dict) -> list[AggregateMetrics]:
    """Rebuild metrics from a stored results file by re-aggregating its trials."""
    recs = [TrialRecord(**t) for t in data.get("trials", [])]
    return aggregate(recs)


def write_trial_trace(rec: TrialRecord, path: Path) -> None:
    if rec.result is not None:
        path.write_text(trace_to_jsonl(rec.result.trace))
