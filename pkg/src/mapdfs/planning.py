"""Single-agent shortest paths on the oriented environment.

Planning ignores time and every other agent: a path is simply the
minimum-hop node sequence that respects edge directions.
"""

from __future__ import annotations

import heapq
import math

from .orientation import OrientedEnvironment

__all__ = ["Path", "NoPathError", "Planner", "shortest_path", "replan_from"]

Path = tuple[int, ...]


class NoPathError(LookupError):
    pass


class Planner:
    """A* over hop counts with a straight-line heuristic.

    Straight-line distance divided by the longest edge is a lower bound on the
    hop count, so the heuristic is admissible.  If all edges have zero length
    the heuristic degenerates to zero and the search is uniform-cost.
    """

    def __init__(self, env: OrientedEnvironment):
        self.env = env
        nodes = env.base.nodes
        self._pos = {v: (n.x, n.y) for v, n in nodes.items()}
        longest = 0.0
        for a, b in env.base.edges:
            longest = max(longest, math.dist(self._pos[a], self._pos[b]))
        self._scale = 1.0 / longest if longest > 0 else 0.0

    def heuristic(self, v: int, goal: int) -> float:
        if self._scale == 0.0:
            return 0.0
        return math.dist(self._pos[v], self._pos[goal]) * self._scale

    def shortest_path(self, start: int, goal: int) -> Path:
        succ = self.env.successors
        if start not in succ or goal not in succ:
            raise NoPathError(f"unknown node in ({start}, {goal})")
        if start == goal:
            return (start,)
        h = self.heuristic
        g = {start: 0}
        parent: dict[int, int] = {}
        closed: set[int] = set()
        # (f, g-tiebreak, node): equal f resolved towards deeper nodes, then smaller id
        heap = [(h(start, goal), 0, start)]
        while heap:
            _, neg_g, v = heapq.heappop(heap)
            if v in closed:
                continue
            if v == goal:
                path = [v]
                while v != start:
                    v = parent[v]
                    path.append(v)
                return tuple(reversed(path))
            closed.add(v)
            gv = -neg_g + 1
            for w in succ[v]:
                if w in closed:
                    continue
                if gv < g.get(w, math.inf):
                    g[w] = gv
                    parent[w] = v
                    heapq.heappush(heap, (gv + h(w, goal), -gv, w))
        raise NoPathError(f"node {goal} is unreachable from {start}")

    def replan_from(self, detour_node: int, destination: int) -> Path:
        return self.shortest_path(detour_node, destination)


def shortest_path(env: OrientedEnvironment, start: int, goal: int) -> Path:
    return Planner(env).shortest_path(start, goal)


def replan_from(env: OrientedEnvironment, detour_node: int, destination: int) -> Path:
    """Fresh shortest path from the node an agent was redirected to.

    Nothing is blacklisted: the new path may well pass through the node that
    was just denied.
    """
    return Planner(env).shortest_path(detour_node, destination)
