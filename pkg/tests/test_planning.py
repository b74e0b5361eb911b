import random

from hypothesis import given, settings, strategies as st

from mapdfs.graph import Edge, EnvironmentGraph, Node
from mapdfs.layouts import cycle_graph, random_environment
from mapdfs.orientation import OrientedEnvironment, orient_main_area
from mapdfs.planning import Planner, replan_from, shortest_path

from oracles import bfs_distance


def directed_c5(chord=False):
    g = cycle_graph(5)
    arcs = {(i, i + 1): (i, i + 1) for i in range(4)}
    arcs[(0, 4)] = (4, 0)
    if chord:
        nodes = list(g.nodes.values())
        edges = [Edge(*k) for k in g.edges] + [Edge(0, 2)]
        g = EnvironmentGraph(nodes, edges)
        arcs[(0, 2)] = (2, 0)
    return OrientedEnvironment(g, arcs)


def test_identity():
    env = directed_c5()
    assert shortest_path(env, 3, 3) == (3,)


def test_directed_c5_goes_around():
    env = directed_c5()
    assert shortest_path(env, 0, 4) == (0, 1, 2, 3, 4)
    assert shortest_path(env, 4, 0) == (4, 0)


def test_replan_reenters_denied_node():
    # agent at 0 wanted 1 but was sent along the chord... only 0->1 leaves 0,
    # so detour from 2 back towards 1 must go round through 0 again
    env = directed_c5(chord=True)
    path = replan_from(env, 2, 1)
    assert path == (2, 0, 1)
    assert len(path) - 1 == bfs_distance(env.base, env.arcs, 2, 1)


def test_replan_equals_shortest(oriented):
    env = oriented["env1"]
    assert replan_from(env, 5, 40) == shortest_path(env, 5, 40)
    assert replan_from(env, 7, 7) == (7,)


def check_path(env, path, start, goal):
    assert path[0] == start and path[-1] == goal
    for u, v in zip(path, path[1:]):
        assert env.can_traverse(u, v), (u, v)
    assert len(path) - 1 == bfs_distance(env.base, env.arcs, start, goal)


def test_bundled_pairs_match_bfs(oriented):
    rng = random.Random(1)
    for name, env in oriented.items():
        planner = Planner(env)
        nodes = sorted(env.base.nodes)
        for _ in range(60):
            a, b = rng.choice(nodes), rng.choice(nodes)
            check_path(env, planner.shortest_path(a, b), a, b)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**9))
def test_random_environments_match_bfs(seed):
    rng = random.Random(seed)
    g = random_environment(rng, main_nodes=rng.randint(3, 35), n_trees=rng.randint(0, 5))
    env = orient_main_area(g, seed % 97)
    planner = Planner(env)
    nodes = sorted(g.nodes)
    for _ in range(20):
        a, b = rng.choice(nodes), rng.choice(nodes)
        check_path(env, planner.shortest_path(a, b), a, b)


def test_stateless(oriented):
    planner = Planner(oriented["env2"])
    assert planner.shortest_path(3, 44) == planner.shortest_path(3, 44)


def test_coincident_coordinates_fall_back():
    nodes = [Node(i, 0.0, 0.0) for i in range(4)]
    g = EnvironmentGraph(nodes, [Edge(0, 1), Edge(1, 2), Edge(2, 3), Edge(3, 0)])
    env = orient_main_area(g)
    planner = Planner(env)
    assert planner.heuristic(0, 2) == 0.0
    for a in range(4):
        for b in range(4):
            check_path(env, planner.shortest_path(a, b), a, b)
