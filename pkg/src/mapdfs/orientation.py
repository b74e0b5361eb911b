"""Strong orientation of the main area.

A bridgeless connected graph always admits an orientation that makes it
strongly connected.  The construction used here is the linear one: run a
DFS, point tree edges away from the start node and back edges towards it.
Marginal-zone edges are left undirected.
"""

from __future__ import annotations

import json
import random
from collections import deque

from .graph import (
    Edge,
    EnvironmentGraph,
    GraphError,
    ParseError,
    StructureError,
    parse_environment_dict,
    validate,
)

__all__ = [
    "DEFAULT_ORIENTATION_SEED",
    "OrientationError",
    "OrientedEnvironment",
    "orient_main_area",
    "verify_strong_connectivity",
    "load_oriented",
    "dump_oriented",
]

DEFAULT_ORIENTATION_SEED = 0


class OrientationError(GraphError):
    """Raised when the main area cannot be strongly oriented."""


class OrientedEnvironment:
    """An environment whose main-area edges each carry one direction.

    ``arcs`` maps the canonical ``(min, max)`` key of every main-area edge to
    its ``(tail, head)``.  ``successors[v]`` lists where an agent standing on
    ``v`` may move next, sorted by node id.
    """

    def __init__(self, base: EnvironmentGraph, arcs: dict[tuple[int, int], tuple[int, int]]):
        missing = base.main_edges - set(arcs)
        extra = set(arcs) - base.main_edges
        if missing:
            raise OrientationError(f"main-area edges without direction: {sorted(missing)[:5]}")
        if extra:
            raise OrientationError(f"directed edges outside the main area: {sorted(extra)[:5]}")
        for key, (tail, head) in arcs.items():
            if {tail, head} != set(key):
                raise OrientationError(f"arc {tail}->{head} does not match edge {key}")
        self.base = base
        self.arcs = dict(sorted(arcs.items()))
        succ: dict[int, list[int]] = {v: [] for v in base.nodes}
        pred: dict[int, list[int]] = {v: [] for v in base.nodes}
        for key in base.edges:
            if key in self.arcs:
                tail, head = self.arcs[key]
                succ[tail].append(head)
                pred[head].append(tail)
            else:
                a, b = key
                succ[a].append(b)
                succ[b].append(a)
                pred[a].append(b)
                pred[b].append(a)
        self.successors = {v: sorted(ws) for v, ws in succ.items()}
        self.predecessors = {v: sorted(ws) for v, ws in pred.items()}
        self.main_successors = {
            v: [w for w in self.successors[v] if w in base.main_area] for v in base.main_area
        }

    def __repr__(self):
        return f"OrientedEnvironment({self.base!r}, arcs={len(self.arcs)})"

    def can_traverse(self, u: int, v: int) -> bool:
        key = (u, v) if u < v else (v, u)
        if key not in self.base.edges:
            return False
        arc = self.arcs.get(key)
        return arc is None or arc == (u, v)

    def to_dict(self) -> dict:
        data = self.base.to_dict()
        edges = []
        for key in self.base.edges:
            if key in self.arcs:
                tail, head = self.arcs[key]
                edges.append({"a": tail, "b": head, "direction": "a_to_b"})
            else:
                edges.append({"a": key[0], "b": key[1], "direction": "undirected"})
        data["edges"] = edges
        return data


def orient_main_area(graph: EnvironmentGraph, seed: int = DEFAULT_ORIENTATION_SEED) -> OrientedEnvironment:
    """Orient every main-area edge so that the main area becomes strongly connected.

    The seed picks the DFS start node and shuffles neighbour order, so
    different seeds give different (all valid) orientations.
    """
    report = validate(graph, 0)
    if not report.sc1.passed:
        raise StructureError(f"cannot orient: {report.sc1.detail}")
    rng = random.Random(seed)
    main = sorted(graph.main_area)
    adj: dict[int, list[int]] = {v: [] for v in main}
    for a, b in graph.main_edges:
        adj[a].append(b)
        adj[b].append(a)
    for v in main:
        adj[v].sort()
        rng.shuffle(adj[v])

    start = rng.choice(main)
    disc = {start: 0}
    low = {start: 0}
    arcs: dict[tuple[int, int], tuple[int, int]] = {}
    stack = [(start, None, iter(adj[start]))]
    while stack:
        v, parent, it = stack[-1]
        advanced = False
        for w in it:
            key = (v, w) if v < w else (w, v)
            if w == parent or key in arcs:
                continue
            if w not in disc:
                disc[w] = low[w] = len(disc)
                arcs[key] = (v, w)
                stack.append((w, v, iter(adj[w])))
                advanced = True
                break
            # back edge: w is an ancestor still on the stack
            arcs[key] = (v, w)
            low[v] = min(low[v], disc[w])
        if advanced:
            continue
        stack.pop()
        if parent is not None:
            if low[v] > disc[parent]:
                raise OrientationError(f"bridge ({parent}, {v}) in the main area")
            low[parent] = min(low[parent], low[v])
    return OrientedEnvironment(graph, arcs)


def verify_strong_connectivity(oriented: OrientedEnvironment) -> bool:
    """True iff every main-area node reaches every other along directed main-area edges."""
    main = oriented.base.main_area
    if not main:
        return False
    start = min(main)
    forward = {v: [] for v in main}
    backward = {v: [] for v in main}
    for key in oriented.base.main_edges:
        arc = oriented.arcs.get(key)
        if arc is None:
            # an undirected main-area edge would be a modelling error, not a strong arc
            return False
        tail, head = arc
        forward[tail].append(head)
        backward[head].append(tail)
    return _reach(forward, start) == main and _reach(backward, start) == main


def _reach(adj: dict[int, list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def load_oriented(source: str | bytes | dict) -> OrientedEnvironment:
    """Read an oriented-environment file (environment schema plus ``direction`` per edge)."""
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    else:
        data = source
    nodes, edges = parse_environment_dict(data)
    base = EnvironmentGraph(nodes, [Edge(e.a, e.b) for e in edges])
    arcs = {e.key: (e.a, e.b) for e in edges if e.direction == "a_to_b"}
    return OrientedEnvironment(base, arcs)


def dump_oriented(oriented: OrientedEnvironment) -> str:
    return json.dumps(oriented.to_dict(), indent=1)
