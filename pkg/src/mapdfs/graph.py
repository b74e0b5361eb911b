"""Environment model, bi-connected decomposition and structural validation.

An environment is a connected undirected graph whose *main area* is the
union of its bi-connected components (every node pair of a component lies
on a common cycle) and whose remaining nodes hang off the main area as
small trees.  Each tree touches the main area in exactly one node, its
root.  Tree nodes minus the roots form the *marginal zone*.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

__all__ = [
    "GraphError",
    "ParseError",
    "ConsistencyError",
    "StructureError",
    "Node",
    "Edge",
    "Tree",
    "EnvironmentGraph",
    "ValidationReport",
    "CheckResult",
    "load_environment",
    "dump_environment",
    "biconnected_components",
    "check_component_intersections",
    "classify_marginal_zone",
    "validate",
]

NODE_KINDS = ("plain", "task_endpoint", "parking")
ENDPOINT_ROLES = ("any", "pickup", "delivery")


class GraphError(ValueError):
    """Base class for environment errors."""


class ParseError(GraphError):
    """The environment source is not well formed."""


class ConsistencyError(GraphError):
    """The environment references unknown nodes or repeats identifiers."""


class StructureError(GraphError):
    """The graph does not have the required main-area/tree structure."""


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    kind: str = "plain"
    # only meaningful for task endpoints: restricts which end of a task it may serve
    role: str = "any"

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ConsistencyError(f"node {self.id}: unknown kind {self.kind!r}")
        if self.role not in ENDPOINT_ROLES:
            raise ConsistencyError(f"node {self.id}: unknown role {self.role!r}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ConsistencyError(f"node {self.id}: non-finite coordinates")

    @property
    def pos(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def is_task_endpoint(self) -> bool:
        return self.kind == "task_endpoint"

    @property
    def is_parking(self) -> bool:
        return self.kind == "parking"


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    # None means undirected; otherwise the edge is traversable a -> b only
    direction: str | None = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass(frozen=True)
class Tree:
    """A pendant tree: its root lies in the main area, the rest in the marginal zone."""

    root: int
    nodes: frozenset[int]

    @property
    def marginal(self) -> frozenset[int]:
        return self.nodes - {self.root}


def _undirected_adjacency(node_ids: Iterable[int], edges: Iterable[tuple[int, int]]) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in node_ids}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    for v in adj:
        adj[v].sort()
    return adj


def _is_connected(adj: Mapping[int, list[int]], nodes: Iterable[int] | None = None) -> bool:
    allowed = set(adj) if nodes is None else set(nodes)
    if not allowed:
        return True
    start = min(allowed)
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == allowed


def _blocks(adj: Mapping[int, list[int]]) -> list[list[tuple[int, int]]]:
    """Edge sets of the textbook biconnected blocks (bridges included).

    Iterative Hopcroft-Tarjan: an edge stack is cut every time a child's
    low point does not climb above its parent.
    """
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    blocks: list[list[tuple[int, int]]] = []
    counter = 0
    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        edge_stack: list[tuple[int, int]] = []
        # frames: (node, parent, neighbour iterator)
        stack = [(root, None, iter(adj[root]))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if w not in disc:
                    disc[w] = low[w] = counter
                    counter += 1
                    edge_stack.append((v, w))
                    stack.append((w, v, iter(adj[w])))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    # back edge to an ancestor
                    edge_stack.append((v, w))
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if parent is None:
                continue
            low[parent] = min(low[parent], low[v])
            if low[v] >= disc[parent]:
                block = []
                while True:
                    e = edge_stack.pop()
                    block.append(e)
                    if e == (parent, v):
                        break
                blocks.append(block)
    return blocks


class EnvironmentGraph:
    """Immutable environment with its derived decomposition.

    ``components``, ``main_area`` and ``main_edges`` are always available.
    The tree structure (``trees``, ``roots``, ``marginal_zone``) is only
    defined when the graph satisfies the tree condition; otherwise
    ``structure_error`` explains why and the tree fields are empty.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge]):
        node_map: dict[int, Node] = {}
        for n in nodes:
            if n.id in node_map:
                raise ConsistencyError(f"duplicate node id {n.id}")
            node_map[n.id] = n
        edge_map: dict[tuple[int, int], Edge] = {}
        for e in edges:
            if e.a not in node_map or e.b not in node_map:
                raise ConsistencyError(f"edge ({e.a}, {e.b}) references an unknown node")
            if e.a == e.b:
                raise ConsistencyError(f"self-loop at node {e.a}")
            if e.key in edge_map:
                raise ConsistencyError(f"duplicate edge between {e.key[0]} and {e.key[1]}")
            edge_map[e.key] = e
        self.nodes: dict[int, Node] = dict(sorted(node_map.items()))
        self.edges: dict[tuple[int, int], Edge] = dict(sorted(edge_map.items()))
        self.adjacency = _undirected_adjacency(self.nodes, self.edges)
        if not _is_connected(self.adjacency):
            raise StructureError("environment graph is not connected")

        self.components: list[frozenset[int]] = biconnected_components(self)
        self.main_area: frozenset[int] = frozenset().union(*self.components)
        self.main_edges: frozenset[tuple[int, int]] = frozenset(
            key for key in self.edges if any(key[0] in c and key[1] in c for c in self.components)
        )
        self.trees: list[Tree] = []
        self.roots: frozenset[int] = frozenset()
        self.marginal_zone: frozenset[int] = frozenset()
        self.structure_error: str | None = None
        try:
            self.trees, self.roots, self.marginal_zone = classify_marginal_zone(self)
        except StructureError as exc:
            self.structure_error = str(exc)
        self.tree_of: dict[int, int] = {
            v: k for k, tree in enumerate(self.trees) for v in tree.marginal
        }

    def __repr__(self):
        return (
            f"EnvironmentGraph(|V|={len(self.nodes)}, |E|={len(self.edges)}, "
            f"|V_main|={len(self.main_area)}, components={len(self.components)}, "
            f"trees={len(self.trees)})"
        )

    @property
    def task_endpoints(self) -> list[int]:
        return [v for v, n in self.nodes.items() if n.is_task_endpoint]

    @property
    def parking_nodes(self) -> list[int]:
        return [v for v, n in self.nodes.items() if n.is_parking]

    def pickup_nodes(self) -> list[int]:
        return [v for v, n in self.nodes.items() if n.is_task_endpoint and n.role in ("any", "pickup")]

    def delivery_nodes(self) -> list[int]:
        return [v for v, n in self.nodes.items() if n.is_task_endpoint and n.role in ("any", "delivery")]

    def is_main(self, v: int) -> bool:
        return v in self.main_area

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes.values():
            rec = {"id": n.id, "x": n.x, "y": n.y, "kind": n.kind}
            if n.role != "any":
                rec["role"] = n.role
            nodes.append(rec)
        return {"nodes": nodes, "edges": [{"a": a, "b": b} for a, b in self.edges]}


def biconnected_components(graph: EnvironmentGraph) -> list[frozenset[int]]:
    """Node sets of the bi-connected components, in the cycle sense.

    Blocks consisting of a single edge carry no cycle and are dropped; those
    edges are bridges and must end up inside trees.
    """
    if not _is_connected(graph.adjacency):
        raise StructureError("bi-connected decomposition needs a connected graph")
    comps = []
    for block in _blocks(graph.adjacency):
        if len(block) < 2:
            continue
        comps.append(frozenset(v for e in block for v in e))
    comps.sort(key=lambda c: (min(c), len(c)))
    return comps


def check_component_intersections(components: list[frozenset[int]] | list[set[int]]) -> bool:
    """True iff no two components share more than one node."""
    for i, ci in enumerate(components):
        for cj in components[i + 1 :]:
            if len(set(ci) & set(cj)) > 1:
                return False
    return True


def classify_marginal_zone(graph: EnvironmentGraph) -> tuple[list[Tree], frozenset[int], frozenset[int]]:
    """Split the non-main nodes into pendant trees.

    Every connected piece of ``V \\ V_main`` must attach to the main area
    through exactly one edge; that edge's main-area end is the tree root.
    Bridges joining two main-area nodes directly are also rejected.
    """
    main = graph.main_area
    if not main:
        raise StructureError("main area is empty: the graph has no cycle")
    for a, b in graph.edges:
        if a in main and b in main and (a, b) not in graph.main_edges:
            raise StructureError(f"bridge ({a}, {b}) joins two main-area nodes directly")
    outside = set(graph.nodes) - main
    trees: list[Tree] = []
    seen: set[int] = set()
    for start in sorted(outside):
        if start in seen:
            continue
        piece = {start}
        stack = [start]
        attachments: list[tuple[int, int]] = []
        while stack:
            v = stack.pop()
            for w in graph.adjacency[v]:
                if w in main:
                    attachments.append((w, v))
                elif w not in piece:
                    piece.add(w)
                    stack.append(w)
        seen |= piece
        if len(attachments) != 1:
            roots = sorted({r for r, _ in attachments})
            raise StructureError(
                f"nodes {sorted(piece)} are not a tree hanging from a single root "
                f"(attached via {len(attachments)} edges to {roots})"
            )
        trees.append(Tree(root=attachments[0][0], nodes=frozenset(piece | {attachments[0][0]})))
    trees.sort(key=lambda t: (t.root, min(t.marginal)))
    roots = frozenset(t.root for t in trees)
    marginal = frozenset(outside)
    return trees, roots, marginal


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    sc1: CheckResult
    sc2: CheckResult
    sc3: CheckResult
    ac1: CheckResult
    open_node_margin: int
    efficiency_warning: bool
    n_agents: int
    main_area_size: int
    n_components: int

    @property
    def ok(self) -> bool:
        return self.sc1.passed and self.sc2.passed and self.sc3.passed and self.ac1.passed

    @property
    def structural_ok(self) -> bool:
        return self.sc1.passed and self.sc2.passed and self.sc3.passed

    def lines(self) -> list[str]:
        out = []
        for name in ("sc1", "sc2", "sc3", "ac1"):
            res = getattr(self, name)
            out.append(f"{name.upper()}: {'pass' if res.passed else 'FAIL'}  {res.detail}".rstrip())
        out.append(f"open-node margin: {self.open_node_margin}")
        if self.efficiency_warning:
            out.append(
                f"warning: {self.n_agents} agents occupy more than half of the "
                f"{self.main_area_size} main-area nodes"
            )
        return out

    def to_dict(self) -> dict:
        d = {}
        for name in ("sc1", "sc2", "sc3", "ac1"):
            res = getattr(self, name)
            d[name] = {"passed": res.passed, "detail": res.detail}
        d.update(
            open_node_margin=self.open_node_margin,
            efficiency_warning=self.efficiency_warning,
            n_agents=self.n_agents,
            main_area_size=self.main_area_size,
            n_components=self.n_components,
        )
        return d


def _check_sc1(graph: EnvironmentGraph) -> CheckResult:
    if not graph.main_area:
        return CheckResult(False, "main area is empty")
    adj = _undirected_adjacency(graph.main_area, graph.main_edges)
    if not _is_connected(adj):
        return CheckResult(False, "main area is disconnected")
    return CheckResult(True, f"{len(graph.components)} component(s), {len(graph.main_area)} nodes")


def _check_sc3(graph: EnvironmentGraph) -> CheckResult:
    problems = []
    for v in graph.parking_nodes:
        if v in graph.main_area:
            problems.append(f"parking node {v} lies in the main area")
        elif len(graph.adjacency[v]) != 1:
            problems.append(f"parking node {v} is not an end node")
    for tree in graph.trees:
        kinds = {graph.nodes[v].kind for v in tree.marginal}
        if "parking" in kinds and "task_endpoint" in kinds:
            problems.append(f"tree rooted at {tree.root} mixes parking nodes and task endpoints")
    if problems:
        return CheckResult(False, "; ".join(problems))
    return CheckResult(True, f"{len(graph.parking_nodes)} parking node(s)")


def validate(graph: EnvironmentGraph, n_agents: int) -> ValidationReport:
    """Check the structural conditions and the agent-count condition."""
    sc1 = _check_sc1(graph)
    if graph.structure_error is None:
        sc2 = CheckResult(True, f"{len(graph.trees)} tree(s), marginal zone of {len(graph.marginal_zone)}")
        sc3 = _check_sc3(graph)
    else:
        sc2 = CheckResult(False, graph.structure_error)
        sc3 = CheckResult(False, "not evaluated: tree structure undefined")
    size = len(graph.main_area)
    margin = size - n_agents
    ac1 = CheckResult(margin >= 2, f"|V_main| - n_agents = {margin} (need >= 2)")
    return ValidationReport(
        sc1=sc1,
        sc2=sc2,
        sc3=sc3,
        ac1=ac1,
        open_node_margin=margin,
        efficiency_warning=n_agents > size / 2,
        n_agents=n_agents,
        main_area_size=size,
        n_components=len(graph.components),
    )


def _parse_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    return value


def _parse_float(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what} must be a number, got {value!r}")
    return float(value)


def parse_environment_dict(data) -> tuple[list[Node], list[Edge]]:
    if not isinstance(data, dict):
        raise ParseError("environment must be a JSON object")
    if not isinstance(data.get("nodes"), list) or not isinstance(data.get("edges"), list):
        raise ParseError("environment needs 'nodes' and 'edges' lists")
    nodes = []
    for i, rec in enumerate(data["nodes"]):
        if not isinstance(rec, dict):
            raise ParseError(f"nodes[{i}] is not an object")
        try:
            nid = _parse_int(rec["id"], f"nodes[{i}].id")
            x = _parse_float(rec["x"], f"nodes[{i}].x")
            y = _parse_float(rec["y"], f"nodes[{i}].y")
        except KeyError as exc:
            raise ParseError(f"nodes[{i}] is missing field {exc}") from None
        kind = rec.get("kind", "plain")
        role = rec.get("role", "any")
        if kind not in NODE_KINDS:
            raise ParseError(f"nodes[{i}]: unknown kind {kind!r}")
        if role not in ENDPOINT_ROLES:
            raise ParseError(f"nodes[{i}]: unknown role {role!r}")
        nodes.append(Node(nid, x, y, kind, role))
    edges = []
    for i, rec in enumerate(data["edges"]):
        if not isinstance(rec, dict):
            raise ParseError(f"edges[{i}] is not an object")
        try:
            a = _parse_int(rec["a"], f"edges[{i}].a")
            b = _parse_int(rec["b"], f"edges[{i}].b")
        except KeyError as exc:
            raise ParseError(f"edges[{i}] is missing field {exc}") from None
        direction = rec.get("direction")
        if direction not in (None, "undirected", "a_to_b", "b_to_a"):
            raise ParseError(f"edges[{i}]: unknown direction {direction!r}")
        if direction == "b_to_a":
            a, b, direction = b, a, "a_to_b"
        edges.append(Edge(a, b, None if direction in (None, "undirected") else direction))
    return nodes, edges


def load_environment(source: str | bytes | dict) -> EnvironmentGraph:
    """Build an environment from JSON text (or an already-decoded object).

    Any ``direction`` fields are ignored here; see
    :func:`mapdfs.orientation.load_oriented` for oriented files.
    """
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    else:
        data = source
    nodes, edges = parse_environment_dict(data)
    return EnvironmentGraph(nodes, [Edge(e.a, e.b) for e in edges])


def dump_environment(graph: EnvironmentGraph) -> str:
    return json.dumps(graph.to_dict(), indent=1)
