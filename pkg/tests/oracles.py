"""Brute-force reference implementations used only by the tests.

None of these import the code paths they check: they work from the raw
edge list (and, for directed checks, the raw arc table).
"""

from __future__ import annotations

from collections import deque
from itertools import combinations


def adjacency(nodes, edges):
    adj = {v: set() for v in nodes}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def simple_paths(adj, u, v, allowed):
    """Every simple u-v path whose nodes stay inside ``allowed``."""
    out = []
    stack = [(u, [u])]
    while stack:
        x, path = stack.pop()
        for y in adj[x]:
            if y not in allowed or y in path:
                continue
            if y == v:
                out.append(path + [y])
            else:
                stack.append((y, path + [y]))
    return out


def _connected_avoiding(adj, u, v, allowed, banned_nodes, banned_edge):
    seen = {u}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in allowed or y in banned_nodes or y in seen:
                continue
            if banned_edge is not None and {x, y} == banned_edge:
                continue
            if y == v:
                return True
            seen.add(y)
            queue.append(y)
    return False


def on_common_cycle(adj, u, v, allowed):
    """Two internally node-disjoint u-v paths exist inside ``allowed``.

    Exhaustive over the first path; the second is searched for in what the
    first leaves free.
    """
    for path in simple_paths(adj, u, v, allowed):
        interior = set(path[1:-1])
        banned_edge = {u, v} if len(path) == 2 else None
        if _connected_avoiding(adj, u, v, allowed, interior, banned_edge):
            return True
    return False


def brute_force_components(nodes, edges):
    """Maximal node sets (size >= 3) in which every pair lies on a cycle of the induced subgraph."""
    adj = adjacency(nodes, edges)
    nodes = sorted(nodes)
    good = []
    for size in range(len(nodes), 2, -1):
        for subset in combinations(nodes, size):
            s = set(subset)
            if any(s < g for g in good):
                continue
            if any(len(adj[x] & s) < 2 for x in s):
                continue
            if all(on_common_cycle(adj, a, b, s) for a, b in combinations(subset, 2)):
                good.append(s)
    return sorted((frozenset(g) for g in good), key=lambda c: (min(c), len(c)))


def transitive_closure(nodes, arcs):
    """Reachability matrix by repeated squaring-free Warshall."""
    nodes = sorted(nodes)
    reach = {u: {u} for u in nodes}
    for u, v in arcs:
        reach[u].add(v)
    for k in nodes:
        for i in nodes:
            if k in reach[i]:
                reach[i] |= reach[k]
    return reach


def strongly_connected(nodes, arcs):
    reach = transitive_closure(nodes, arcs)
    full = set(nodes)
    return all(reach[u] >= full for u in nodes)


def bfs_distance(graph, arcs, start, goal):
    """Hop distance on the mixed graph: arcs one-way, every other edge both ways."""
    nxt = {v: [] for v in graph.nodes}
    for key in graph.edges:
        if key in arcs:
            tail, head = arcs[key]
            nxt[tail].append(head)
        else:
            nxt[key[0]].append(key[1])
            nxt[key[1]].append(key[0])
    dist = {start: 0}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        if x == goal:
            return dist[x]
        for y in nxt[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return None
