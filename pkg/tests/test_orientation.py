import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from mapdfs.graph import Edge, EnvironmentGraph, Node, StructureError
from mapdfs.layouts import build_figure2, build_figure3, cycle_graph, random_environment
from mapdfs.orientation import (
    OrientationError,
    OrientedEnvironment,
    dump_oriented,
    load_oriented,
    orient_main_area,
    verify_strong_connectivity,
)

from oracles import strongly_connected


def test_c4_is_a_directed_cycle():
    env = orient_main_area(cycle_graph(4))
    outdeg = {v: 0 for v in range(4)}
    for tail, _ in env.arcs.values():
        outdeg[tail] += 1
    assert set(outdeg.values()) == {1}
    assert verify_strong_connectivity(env)


def test_c4_with_reversed_edge_fails():
    g = cycle_graph(4)
    arcs = {(0, 1): (0, 1), (1, 2): (1, 2), (2, 3): (2, 3), (0, 3): (3, 0)}
    assert verify_strong_connectivity(OrientedEnvironment(g, arcs))
    arcs[(2, 3)] = (3, 2)
    assert not verify_strong_connectivity(OrientedEnvironment(g, arcs))


def test_figure2_leaves_trees_undirected():
    g = build_figure2()
    env = orient_main_area(g)
    assert set(env.arcs) == g.main_edges
    for key in g.edges:
        if key not in g.main_edges:
            assert key not in env.arcs
            assert env.can_traverse(*key) and env.can_traverse(key[1], key[0])
    assert verify_strong_connectivity(env)


def test_rejects_disconnected_main_area():
    with pytest.raises(StructureError):
        orient_main_area(build_figure3())


def test_missing_direction_rejected():
    g = cycle_graph(3)
    with pytest.raises(OrientationError):
        OrientedEnvironment(g, {(0, 1): (0, 1)})


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**9), orient_seed=st.integers(0, 1000))
def test_random_bridgeless_strongly_oriented(seed, orient_seed):
    rng = random.Random(seed)
    g = random_environment(rng, main_nodes=rng.randint(3, 20), n_trees=rng.randint(0, 3))
    env = orient_main_area(g, orient_seed)
    assert verify_strong_connectivity(env)
    assert strongly_connected(g.main_area, env.arcs.values())
    assert set(env.arcs) == g.main_edges


def test_deterministic(bundled):
    g = bundled["env1"]
    assert orient_main_area(g, 3).arcs == orient_main_area(g, 3).arcs
    assert orient_main_area(g, 3).arcs != orient_main_area(g, 4).arcs


def test_verify_is_pure(oriented):
    env = oriented["env2"]
    assert verify_strong_connectivity(env) == verify_strong_connectivity(env)


def test_oriented_file_roundtrip(oriented):
    env = oriented["env1"]
    text = dump_oriented(env)
    again = load_oriented(text)
    assert again.arcs == env.arcs
    data = json.loads(text)
    kinds = {e["direction"] for e in data["edges"]}
    assert kinds == {"a_to_b", "undirected"}


def test_oriented_file_b_to_a():
    g = cycle_graph(3)
    data = g.to_dict()
    data["edges"] = [
        {"a": 0, "b": 1, "direction": "a_to_b"},
        {"a": 1, "b": 2, "direction": "a_to_b"},
        {"a": 0, "b": 2, "direction": "b_to_a"},
    ]
    env = load_oriented(data)
    assert env.arcs[(0, 2)] == (2, 0)
    assert verify_strong_connectivity(env)
