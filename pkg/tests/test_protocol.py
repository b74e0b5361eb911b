import random

import pytest

from mapdfs.graph import Edge, EnvironmentGraph, Node
from mapdfs.layouts import build_figure2
from mapdfs.orientation import OrientedEnvironment, orient_main_area
from mapdfs.protocol import (
    Accept,
    CarrierState,
    Deny,
    Depart,
    Detour,
    Move,
    NodeNetwork,
    Phase,
    ProtocolViolation,
    Request,
    ReserveGrant,
    ReserveQuery,
    ReserveRefuse,
    Send,
    Stay,
    Wait,
    carrier_on_reply,
    carrier_tick,
    facilitator_of,
    handle_request,
    handle_reserve_query,
    parking_tree_phase_update,
)
from mapdfs.engine import messages_to_jsonl

C, A, B, D, E = range(5)


def fan_env():
    """c -> {a, b, d} -> e -> c: three ways out of c."""
    nodes = [Node(i, float(x), float(y)) for i, (x, y) in enumerate([(0, 0), (1, 1), (1, 0), (1, -1), (2, 0)])]
    pairs = [(C, A), (C, B), (C, D), (A, E), (B, E), (D, E), (C, E)]
    g = EnvironmentGraph(nodes, [Edge(*p) for p in pairs])
    arcs = {}
    for tail, head in [(C, A), (C, B), (C, D), (A, E), (B, E), (D, E), (E, C)]:
        arcs[(min(tail, head), max(tail, head))] = (tail, head)
    return OrientedEnvironment(g, arcs)


def net(env, seed=0):
    return NodeNetwork(env, random.Random(seed), record=True)


def ask(network, agent, cur, nxt, path=None):
    req = Request(agent, cur, nxt, path or (cur, nxt))
    return network.request(cur, req)


def test_accept_reserves_target():
    network = net(fan_env())
    network.agents[C].reservation = 0
    reply = ask(network, 0, C, A)
    assert reply == Accept(0, A)
    assert network.agents[A].reservation == 0
    assert network.agents[C].releasing


def test_detour_is_random_among_free_neighbours():
    seen = set()
    for seed in range(40):
        network = net(fan_env(), seed)
        network.agents[C].reservation = 0
        network.agents[A].reservation = 9
        reply = ask(network, 0, C, A)
        assert isinstance(reply, Deny) and isinstance(reply.som, Detour)
        x = reply.som.node
        assert x in (B, D)
        assert network.agents[x].reservation == 0
        other = D if x == B else B
        assert network.agents[other].reservation is None
        assert network.agents[A].reservation == 9
        seen.add(x)
    assert seen == {B, D}


def test_wait_when_everything_reserved():
    network = net(fan_env())
    network.agents[C].reservation = 0
    for v, holder in ((A, 5), (B, 6), (D, 7)):
        network.agents[v].reservation = holder
    reply = ask(network, 0, C, A)
    assert reply == Deny(0, Wait())
    # a denial leaves no new reservation behind
    assert [network.agents[v].reservation for v in (A, B, D)] == [5, 6, 7]
    assert not network.agents[C].releasing


def test_request_from_non_holder_is_a_violation():
    network = net(fan_env())
    network.agents[C].reservation = 3
    with pytest.raises(ProtocolViolation):
        ask(network, 0, C, A)


def test_illegal_direction_is_a_violation():
    network = net(fan_env())
    network.agents[A].reservation = 0
    with pytest.raises(ProtocolViolation):
        ask(network, 0, A, C)


def test_reserve_query_cases():
    env = fan_env()
    network = net(env)
    empty = network.agents[B]
    assert handle_reserve_query(empty, ReserveQuery(1, B)) == ReserveGrant(1, B)
    assert empty.reservation == 1

    occupied = network.agents[D]
    occupied.reservation = 4
    assert handle_reserve_query(occupied, ReserveQuery(1, D)) == ReserveRefuse(1, D)
    assert occupied.reservation == 4

    # the occupant already holds its onward node and leaves next timestep
    occupied.releasing = True
    assert handle_reserve_query(occupied, ReserveQuery(1, D)) == ReserveGrant(1, D)
    assert occupied.reservation == 1 and not occupied.releasing


def test_chain_departure_in_network():
    network = net(fan_env())
    network.agents[C].reservation = 0
    network.agents[A].reservation = 1
    assert ask(network, 1, A, E) == Accept(1, E)
    assert ask(network, 0, C, A) == Accept(0, A)
    assert network.agents[A].reservation == 0


def test_inbox_processed_in_order():
    network = net(fan_env())
    network.agents[C].reservation = 0
    ask(network, 0, C, A)
    kinds = [m[3] for m in network.messages]
    assert kinds == ["request", "reserve_query", "reserve_grant", "accept"]
    assert not network.agents[C].inbox


def test_message_export():
    network = net(fan_env())
    network.agents[C].reservation = 0
    ask(network, 0, C, A)
    lines = messages_to_jsonl(network.messages).splitlines()
    assert len(lines) == 4
    assert '"sender"' in lines[0] and '"payload"' in lines[0]


# -- carrier side ------------------------------------------------------


def test_tick_mid_tree_moves_without_message():
    env = orient_main_area(build_figure2())
    c = CarrierState(0, 8, Phase.TO_PICKUP, path=(8, 9), gate=0)
    assert carrier_tick(c, env) == Move(9)
    assert c.pending_request is None


def test_tick_on_main_area_asks_current_node():
    env = orient_main_area(build_figure2())
    c = CarrierState(0, 1, Phase.TO_PICKUP, path=(1, 4, 3))
    out = carrier_tick(c, env)
    assert isinstance(out, Send) and out.to == 1
    assert out.message.path == (1, 4, 3)


def test_tick_towards_root_asks_root():
    env = orient_main_area(build_figure2())
    c = CarrierState(0, 8, Phase.TO_DELIVERY, path=(8, 0, 1), gate=0)
    out = carrier_tick(c, env)
    assert out.to == 0 == facilitator_of(env, 8)


def test_tick_without_path_is_a_violation():
    env = orient_main_area(build_figure2())
    with pytest.raises(ProtocolViolation):
        carrier_tick(CarrierState(0, 1, Phase.TO_PICKUP, path=(1,)), env)


def _replan_forbidden(*_):
    raise AssertionError("replan must not be called")


def test_reply_accept():
    c = CarrierState(0, C, Phase.TO_PICKUP, path=(C, A, E))
    c.pending_request = Request(0, C, A, c.path)
    assert carrier_on_reply(c, Accept(0, A), _replan_forbidden) == Depart(A)
    assert c.path == (A, E) and c.reserved_next == A


def test_reply_wait_keeps_path():
    c = CarrierState(0, C, Phase.TO_PICKUP, path=(C, A, E))
    c.pending_request = Request(0, C, A, c.path)
    assert carrier_on_reply(c, Deny(0, Wait()), _replan_forbidden) == Stay()
    assert c.path == (C, A, E) and c.pending_request is None


def test_reply_detour_replans():
    env = fan_env()
    c = CarrierState(0, C, Phase.TO_PICKUP, path=(C, A, E))
    c.pending_request = Request(0, C, A, c.path)
    calls = []

    def replan(x, dest):
        calls.append((x, dest))
        return (x, E)

    assert carrier_on_reply(c, Deny(0, Detour(B)), replan) == Depart(B, detour=True)
    assert calls == [(B, E)] and c.path == (B, E)


def test_reply_without_request():
    c = CarrierState(0, C, Phase.TO_PICKUP, path=(C, A))
    with pytest.raises(ProtocolViolation):
        carrier_on_reply(c, Accept(0, A), _replan_forbidden)


# -- tree gates --------------------------------------------------------


def figure2_network():
    env = orient_main_area(build_figure2())
    return env, net(env)


def test_entry_into_empty_tree():
    env, network = figure2_network()
    network.agents[0].reservation = 0
    assert ask(network, 0, 0, 8) == Accept(0, 8)
    assert network.gate(0).moving == 0


def test_second_entry_gets_detour():
    env, network = figure2_network()
    network.gate(0).moving = 5
    network.agents[0].reservation = 0
    reply = ask(network, 0, 0, 8)
    # root 0 has the single outward main-area neighbour 1
    assert reply == Deny(0, Detour(1))


def test_second_entry_waits_when_root_boxed_in():
    env, network = figure2_network()
    network.gate(0).moving = 5
    network.agents[0].reservation = 0
    network.agents[1].reservation = 6
    assert ask(network, 0, 0, 8) == Deny(0, Wait())


def test_parking_tree_outbound_refuses_entry():
    env, network = figure2_network()
    gate = network.gate(1)
    assert gate.parking and gate.phase == "outbound"
    network.agents[7].reservation = 0
    network.agents[6].reservation = 4
    assert ask(network, 0, 7, 10) == Deny(0, Wait())


def test_parked_agent_leaves_while_outbound():
    env, network = figure2_network()
    reply = network.request(7, Request(2, 11, 10, (11, 10, 7)))
    assert reply == Accept(2, 10)
    assert network.gate(1).moving == 2


def test_exit_blocked_while_another_moves():
    env, network = figure2_network()
    network.gate(1).moving = 3
    assert network.request(7, Request(2, 11, 10, (11, 10, 7))) == Deny(2, Wait())


def test_phase_flip_and_no_reexit():
    env, network = figure2_network()
    gate = network.gate(1)
    assert not parking_tree_phase_update(gate, pool_empty=False)
    assert not parking_tree_phase_update(gate, pool_empty=True, pending_exit=True)
    assert gate.phase == "outbound"
    assert parking_tree_phase_update(gate, pool_empty=True)
    assert gate.phase == "inbound"
    network.agents[7].reservation = 0
    assert ask(network, 0, 7, 10) == Accept(0, 10)
    gate.release(0)
    assert network.request(7, Request(2, 11, 10, (11, 10, 7))) == Deny(2, Wait())


def test_non_parking_gate_ignores_phase():
    env, network = figure2_network()
    assert not parking_tree_phase_update(network.gate(0), pool_empty=True)


def test_wrong_facilitator_is_a_violation():
    env, network = figure2_network()
    with pytest.raises(ProtocolViolation):
        handle_request(network.agents[7], Request(0, 8, 0, (8, 0)), network)
