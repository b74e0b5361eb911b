"""Bundled environment layouts and random environment generators.

The four bundled layouts are structural analogs of the evaluation
environments: a grid-like main area made of several bi-connected
components, pendant trees for task endpoints and parking.

* ``env1`` -- 10 task endpoints at the ends of trees, 40 parking nodes.
* ``env2`` -- same main area and parking, 10 task endpoints inside the main area.
* ``env3`` -- ``env1`` with a single pickup endpoint; the rest only take deliveries.
* ``env4`` -- 10-node main area of three 4-cycles, every node an endpoint, no parking.
"""

from __future__ import annotations

import json
import random
from importlib import resources

from .graph import Edge, EnvironmentGraph, Node, load_environment

__all__ = [
    "BUNDLED",
    "bundled_path",
    "load_bundled",
    "build_env1",
    "build_env2",
    "build_env3",
    "build_env4",
    "build_figure2",
    "build_figure3",
    "cycle_graph",
    "random_connected_graph",
    "random_environment",
]

BUNDLED = ("env1", "env2", "env3", "env4")

GRID_W, GRID_H = 10, 5


class _Builder:
    def __init__(self):
        self.nodes: list[Node] = []
        self.edges: list[Edge] = []

    def node(self, x: float, y: float, kind: str = "plain", role: str = "any") -> int:
        nid = len(self.nodes)
        self.nodes.append(Node(nid, float(x), float(y), kind, role))
        return nid

    def set_kind(self, nid: int, kind: str, role: str = "any") -> None:
        n = self.nodes[nid]
        self.nodes[nid] = Node(n.id, n.x, n.y, kind, role)

    def edge(self, a: int, b: int) -> None:
        self.edges.append(Edge(a, b))

    def build(self) -> EnvironmentGraph:
        return EnvironmentGraph(self.nodes, self.edges)


def _main_area(b: _Builder) -> dict[tuple[int, int], int]:
    """10x5 grid plus a hexagonal loop fused at the middle of each side."""
    grid = {}
    for y in range(GRID_H):
        for x in range(GRID_W):
            grid[x, y] = b.node(x, y)
    for y in range(GRID_H):
        for x in range(GRID_W):
            if x + 1 < GRID_W:
                b.edge(grid[x, y], grid[x + 1, y])
            if y + 1 < GRID_H:
                b.edge(grid[x, y], grid[x, y + 1])
    for anchor, sign in (((0, 2), -1), ((GRID_W - 1, 2), 1)):
        ax = anchor[0]
        pts = [(ax + sign * 1, 1.5), (ax + sign * 2, 1.5), (ax + sign * 3, 2.0), (ax + sign * 2, 2.5), (ax + sign * 1, 2.5)]
        loop = [b.node(px, py) for px, py in pts]
        grid[("loop", sign)] = loop[2]
        ring = [grid[anchor]] + loop
        for i in range(len(ring)):
            b.edge(ring[i], ring[(i + 1) % len(ring)])
    return grid


def _parking_tree(b: _Builder, root: int, x: float, outward: int) -> None:
    hub = b.node(x, GRID_H if outward > 0 else -1)
    b.edge(root, hub)
    y = b.nodes[hub].y + outward
    for dx in (-0.3, -0.1, 0.1, 0.3):
        leaf = b.node(x + dx, y, "parking")
        b.edge(hub, leaf)


def _parking(b: _Builder, grid) -> None:
    for x in range(1, GRID_W, 2):
        _parking_tree(b, grid[x, GRID_H - 1], x, +1)
    for x in range(0, GRID_W, 2):
        _parking_tree(b, grid[x, 0], x, -1)


def _endpoint_trees(b: _Builder, grid, pickup_x: int | None = None) -> None:
    def role(x, top):
        if pickup_x is None:
            return "any"
        return "pickup" if (top and x == pickup_x) else "delivery"

    for x in range(0, GRID_W, 2):
        mid = b.node(x, GRID_H)
        b.edge(grid[x, GRID_H - 1], mid)
        end = b.node(x, GRID_H + 1, "task_endpoint", role(x, True))
        b.edge(mid, end)
    for x in range(1, GRID_W, 2):
        end = b.node(x, -1, "task_endpoint", role(x, False))
        b.edge(grid[x, 0], end)


def build_env1() -> EnvironmentGraph:
    b = _Builder()
    grid = _main_area(b)
    _endpoint_trees(b, grid)
    _parking(b, grid)
    return b.build()


def build_env2() -> EnvironmentGraph:
    b = _Builder()
    grid = _main_area(b)
    for x, y in ((1, 1), (3, 1), (5, 1), (7, 1), (2, 3), (4, 3), (6, 3), (8, 3)):
        b.set_kind(grid[x, y], "task_endpoint")
    b.set_kind(grid[("loop", -1)], "task_endpoint")
    b.set_kind(grid[("loop", 1)], "task_endpoint")
    _parking(b, grid)
    return b.build()


def build_env3() -> EnvironmentGraph:
    b = _Builder()
    grid = _main_area(b)
    _endpoint_trees(b, grid, pickup_x=4)
    _parking(b, grid)
    return b.build()


def build_env4() -> EnvironmentGraph:
    """Three 4-cycles chained through two articulation nodes (10 nodes)."""
    b = _Builder()
    pts = [(0, 0), (1, 0), (1, 1), (0, 1), (2, 1), (2, 2), (1, 2), (2, 3), (1, 3), (1, 4)]
    for x, y in pts:
        b.node(x, y, "task_endpoint")
    for cyc in ((0, 1, 2, 3), (2, 4, 5, 6), (5, 7, 8, 9)):
        for i in range(4):
            b.edge(cyc[i], cyc[(i + 1) % 4])
    return b.build()


def build_figure2() -> EnvironmentGraph:
    """Two cycles fused along a shared path, with two pendant trees."""
    b = _Builder()
    pts = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1), (3, 0), (3, 1)]
    for x, y in pts:
        b.node(x, y)
    for a, c in ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4), (2, 6), (6, 7), (7, 3)):
        b.edge(a, c)
    t1 = b.node(-1, 0)
    t2 = b.node(-2, 0, "task_endpoint")
    b.edge(0, t1)
    b.edge(t1, t2)
    t3 = b.node(4, 1)
    t4 = b.node(5, 1.5, "parking")
    t5 = b.node(5, 0.5, "parking")
    b.edge(7, t3)
    b.edge(t3, t4)
    b.edge(t3, t5)
    return b.build()


def build_figure3() -> EnvironmentGraph:
    """Two triangles joined by a two-edge path: the middle node belongs to no tree."""
    b = _Builder()
    for x, y in ((0, 0), (1, 0), (0.5, 1), (3, 0), (4, 0), (3.5, 1), (2, 0)):
        b.node(x, y)
    for a, c in ((0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (1, 6), (6, 3)):
        b.edge(a, c)
    return b.build()


def cycle_graph(n: int) -> EnvironmentGraph:
    import math

    b = _Builder()
    for i in range(n):
        b.node(math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n))
    for i in range(n):
        b.edge(i, (i + 1) % n)
    return b.build()


def random_connected_graph(rng: random.Random, n: int, extra_edge_prob: float = 0.25) -> EnvironmentGraph:
    """Random spanning tree plus independent extra edges."""
    b = _Builder()
    for _ in range(n):
        b.node(rng.random(), rng.random())
    pairs = set()
    for v in range(1, n):
        u = rng.randrange(v)
        pairs.add((u, v))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in pairs and rng.random() < extra_edge_prob:
                pairs.add((u, v))
    for u, v in sorted(pairs):
        b.edge(u, v)
    return b.build()


def random_environment(
    rng: random.Random,
    main_nodes: int = 20,
    max_blocks: int = 3,
    n_trees: int = 4,
    parking_fraction: float = 0.5,
) -> EnvironmentGraph:
    """Random environment satisfying the structural conditions.

    Blocks are grown by ear decomposition (which keeps them 2-connected) and
    glued at single nodes; pendant trees are then attached to random
    main-area nodes, with leaves marked either as parking nodes or as task
    endpoints (never both in one tree).
    """
    main_nodes = max(main_nodes, 3)
    b = _Builder()
    n_blocks = rng.randint(1, max(1, min(max_blocks, (main_nodes - 1) // 2)))
    sizes = [3] * n_blocks
    # the first block brings 3 new nodes, each later one 2 (one node is shared)
    for _ in range(main_nodes - (3 + 2 * (n_blocks - 1))):
        sizes[rng.randrange(n_blocks)] += 1
    main: list[int] = []
    for size in sizes:
        if main:
            block = [rng.choice(main)]
        else:
            block = []
        while len(block) < size:
            block.append(b.node(rng.uniform(0, 10), rng.uniform(0, 10)))
        main.extend(v for v in block if v not in main)
        # base cycle over a prefix, then ears until every node is covered
        c = rng.randint(3, size)
        for i in range(c):
            b.edge(block[i], block[(i + 1) % c])
        placed = block[:c]
        rest = block[c:]
        existing = {tuple(sorted((block[i], block[(i + 1) % c]))) for i in range(c)}
        while rest:
            ear_len = rng.randint(1, len(rest))
            ear, rest = rest[:ear_len], rest[ear_len:]
            u, w = rng.sample(placed, 2)
            chain = [u] + ear + [w]
            for i in range(len(chain) - 1):
                b.edge(chain[i], chain[i + 1])
                existing.add(tuple(sorted((chain[i], chain[i + 1]))))
            placed.extend(ear)
        # a few chords
        for _ in range(rng.randint(0, 2)):
            u, w = rng.sample(placed, 2)
            key = tuple(sorted((u, w)))
            if key not in existing:
                existing.add(key)
                b.edge(u, w)
    for _ in range(n_trees):
        root = rng.choice(main)
        parking = rng.random() < parking_fraction
        tree = [root]
        for _ in range(rng.randint(1, 4)):
            parent = rng.choice(tree)
            child = b.node(rng.uniform(0, 10), rng.uniform(0, 10))
            b.edge(parent, child)
            tree.append(child)
        children = {v: 0 for v in tree}
        for e in b.edges:
            if e.a in children and e.b in children:
                children[e.a] += 1
                children[e.b] += 1
        leaves = [v for v in tree[1:] if children[v] == 1]
        for v in leaves:
            if parking:
                b.set_kind(v, "parking")
            elif rng.random() < 0.7:
                b.set_kind(v, "task_endpoint")
    return b.build()


def bundled_path(name: str):
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled environment {name!r}; choose from {BUNDLED}")
    return resources.files("mapdfs") / "data" / "environments" / f"{name}.json"


def load_bundled(name: str) -> EnvironmentGraph:
    return load_environment(bundled_path(name).read_text())


BUILDERS = {"env1": build_env1, "env2": build_env2, "env3": build_env3, "env4": build_env4}


def write_bundled(directory) -> None:
    """Regenerate the bundled JSON files from the builders."""
    from pathlib import Path

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        (out / f"{name}.json").write_text(json.dumps(build().to_dict(), indent=1) + "\n")
