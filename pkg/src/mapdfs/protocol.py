"""Carrier/node-agent coordination.

Carrier agents plan alone and, before stepping onto or off the main area,
ask their *facilitator* (the node agent they stand on, or the root of the
tree they are in) for permission.  The facilitator asks the target node
agent for a reservation and answers with an acceptance or a denial that
carries a suggestion of movement: wait one timestep, or detour to another
reserved neighbour.  Tree roots additionally admit at most one moving agent
into their tree, and roots of parking trees switch from outbound-only to
inbound-only once the task pool is exhausted.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

from .orientation import OrientedEnvironment
from .planning import Path

__all__ = [
    "ProtocolViolation",
    "Wait",
    "Detour",
    "Som",
    "Request",
    "ReserveQuery",
    "ReserveGrant",
    "ReserveRefuse",
    "Accept",
    "Deny",
    "Move",
    "Send",
    "Depart",
    "Stay",
    "Phase",
    "CarrierState",
    "TreeGate",
    "NodeAgent",
    "NodeNetwork",
    "facilitator_of",
    "carrier_tick",
    "carrier_on_reply",
    "handle_request",
    "handle_reserve_query",
    "tree_root_gate",
    "parking_tree_phase_update",
]


class ProtocolViolation(RuntimeError):
    """A message that cannot occur in a correct run; the trial is aborted."""


@dataclass(frozen=True)
class Wait:
    pass


@dataclass(frozen=True)
class Detour:
    node: int


Som = Union[Wait, Detour]


@dataclass(frozen=True)
class Request:
    agent: int
    current: int
    next_node: int
    path: Path


@dataclass(frozen=True)
class ReserveQuery:
    agent: int
    node: int


@dataclass(frozen=True)
class ReserveGrant:
    agent: int
    node: int


@dataclass(frozen=True)
class ReserveRefuse:
    agent: int
    node: int


@dataclass(frozen=True)
class Accept:
    agent: int
    node: int


@dataclass(frozen=True)
class Deny:
    agent: int
    som: Som


# carrier_tick outcomes
@dataclass(frozen=True)
class Move:
    node: int


@dataclass(frozen=True)
class Send:
    to: int
    message: Request


# carrier_on_reply outcomes
@dataclass(frozen=True)
class Depart:
    node: int
    detour: bool = False


@dataclass(frozen=True)
class Stay:
    pass


class Phase(str, Enum):
    TO_PICKUP = "to_pickup"
    TO_DELIVERY = "to_delivery"
    TO_PARKING = "to_parking"
    PARKED = "parked"
    # no parking node to return to: keep circulating so others can pass
    ROAMING = "roaming"


@dataclass
class CarrierState:
    agent: int
    current_node: int
    phase: Phase = Phase.PARKED
    path: Path = ()
    task: object = None
    reserved_next: int | None = None
    parking: int | None = None
    # index of the tree whose gate this carrier currently holds
    gate: int | None = None
    pending_request: Request | None = None

    @property
    def destination(self) -> int | None:
        return self.path[-1] if self.path else None


def facilitator_of(env: OrientedEnvironment, node: int) -> int:
    base = env.base
    if node in base.main_area:
        return node
    return base.trees[base.tree_of[node]].root


def carrier_tick(carrier: CarrierState, env: OrientedEnvironment) -> Move | Send:
    """Decide the carrier's next step along its path.

    Moves that stay inside the marginal zone need no confirmation once the
    carrier holds its tree's gate; everything else goes through the
    facilitator as a request carrying the full path.
    """
    if len(carrier.path) < 2 or carrier.path[0] != carrier.current_node:
        raise ProtocolViolation(
            f"agent {carrier.agent}: no path to follow from node {carrier.current_node}"
        )
    cur, nxt = carrier.path[0], carrier.path[1]
    main = env.base.main_area
    if cur not in main and nxt not in main and carrier.gate is not None:
        return Move(nxt)
    req = Request(carrier.agent, cur, nxt, carrier.path)
    carrier.pending_request = req
    return Send(facilitator_of(env, cur), req)


def carrier_on_reply(carrier: CarrierState, reply: Accept | Deny, replan: Callable[[int, int], Path]) -> Depart | Stay:
    """Apply the facilitator's answer to the pending request.

    ``replan(node, destination)`` is only called for detours.
    """
    req = carrier.pending_request
    if req is None:
        raise ProtocolViolation(f"agent {carrier.agent}: reply {reply!r} without a pending request")
    carrier.pending_request = None
    if isinstance(reply, Accept):
        if reply.node != req.next_node:
            raise ProtocolViolation(f"agent {carrier.agent}: accepted {reply.node}, asked {req.next_node}")
        carrier.reserved_next = reply.node
        carrier.path = carrier.path[1:]
        return Depart(reply.node)
    som = reply.som
    if isinstance(som, Wait):
        return Stay()
    destination = carrier.destination
    carrier.reserved_next = som.node
    carrier.path = replan(som.node, destination)
    return Depart(som.node, detour=True)


@dataclass
class TreeGate:
    """Entry/exit control a root keeps for one of its trees."""

    index: int
    marginal: frozenset[int]
    parking: bool
    moving: int | None = None
    phase: str = "outbound"

    def admits_entry(self) -> bool:
        if self.moving is not None:
            return False
        return not self.parking or self.phase == "inbound"

    def admits_exit(self) -> bool:
        if self.moving is not None:
            return False
        return self.parking and self.phase == "outbound"

    def release(self, agent: int) -> None:
        if self.moving == agent:
            self.moving = None


@dataclass
class NodeAgent:
    node: int
    out_neighbors: list[int]
    gates: dict[int, TreeGate] = field(default_factory=dict)
    reservation: int | None = None
    # the holder has secured its onward node and leaves at the next timestep
    releasing: bool = False
    inbox: deque = field(default_factory=deque)

    def release(self, agent: int) -> None:
        if self.reservation == agent:
            self.reservation = None
            self.releasing = False


class NodeNetwork:
    """All node agents of the main area plus the message log.

    Messages are delivered synchronously; each node agent drains its own
    inbox strictly in arrival order.
    """

    def __init__(self, env: OrientedEnvironment, rng: random.Random | None = None, record: bool = False):
        self.env = env
        self.rng = rng if rng is not None else random.Random(0)
        self.record = record
        self.messages: list[tuple] = []
        self.t = 0
        base = env.base
        self.agents: dict[int, NodeAgent] = {
            v: NodeAgent(v, list(env.main_successors[v])) for v in sorted(base.main_area)
        }
        for k, tree in enumerate(base.trees):
            parking = any(base.nodes[v].is_parking for v in tree.marginal)
            self.agents[tree.root].gates[k] = TreeGate(k, tree.marginal, parking)

    def log(self, sender: str, receiver: str, kind: str, **payload) -> None:
        if self.record:
            self.messages.append((self.t, sender, receiver, kind, payload))

    def gate(self, tree_index: int) -> TreeGate:
        root = self.env.base.trees[tree_index].root
        return self.agents[root].gates[tree_index]

    def request(self, facilitator: int, req: Request) -> Accept | Deny:
        self.log(f"agent:{req.agent}", f"node:{facilitator}", "request",
                 current=req.current, next=req.next_node, path=list(req.path))
        agent = self.agents[facilitator]
        agent.inbox.append(req)
        reply = None
        while agent.inbox:
            msg = agent.inbox.popleft()
            reply = handle_request(agent, msg, self)
        if isinstance(reply, Accept):
            self.log(f"node:{facilitator}", f"agent:{req.agent}", "accept", node=reply.node)
        else:
            payload = {"som": "wait"} if isinstance(reply.som, Wait) else {"som": "detour", "node": reply.som.node}
            self.log(f"node:{facilitator}", f"agent:{req.agent}", "deny", **payload)
        return reply

    def query(self, sender: int, target: int, agent: int) -> bool:
        msg = ReserveQuery(agent, target)
        self.log(f"node:{sender}", f"node:{target}", "reserve_query", agent=agent)
        reply = handle_reserve_query(self.agents[target], msg)
        kind = "reserve_grant" if isinstance(reply, ReserveGrant) else "reserve_refuse"
        self.log(f"node:{target}", f"node:{sender}", kind, agent=agent)
        return isinstance(reply, ReserveGrant)


def handle_reserve_query(node: NodeAgent, msg: ReserveQuery) -> ReserveGrant | ReserveRefuse:
    """Grant the node for the next timestep if nobody will still be holding it."""
    if node.reservation is None or (node.releasing and node.reservation != msg.agent):
        node.reservation = msg.agent
        node.releasing = False
        return ReserveGrant(msg.agent, node.node)
    return ReserveRefuse(msg.agent, node.node)


def _deny(node: NodeAgent, req: Request, network: NodeNetwork) -> Deny:
    # detour first, wait only if no other outward neighbour can be reserved
    candidates = [w for w in node.out_neighbors if w != req.next_node]
    network.rng.shuffle(candidates)
    for w in candidates:
        if network.query(node.node, w, req.agent):
            node.releasing = True
            return Deny(req.agent, Detour(w))
    return Deny(req.agent, Wait())


def handle_request(node: NodeAgent, req: Request, network: NodeNetwork) -> Accept | Deny:
    """Facilitator logic for a carrier's request to move to ``req.next_node``."""
    env = network.env
    base = env.base
    if not env.can_traverse(req.current, req.next_node):
        raise ProtocolViolation(f"agent {req.agent}: {req.current}->{req.next_node} is not a legal move")
    if req.current == node.node:
        if node.reservation != req.agent:
            raise ProtocolViolation(
                f"agent {req.agent} asks node {node.node} held by {node.reservation}"
            )
        if req.next_node in base.main_area:
            if network.query(node.node, req.next_node, req.agent):
                node.releasing = True
                return Accept(req.agent, req.next_node)
            return _deny(node, req, network)
        return tree_root_gate(node, req, network)
    if base.tree_of.get(req.current) not in node.gates:
        raise ProtocolViolation(f"node {node.node} is not the facilitator of agent {req.agent}")
    return tree_root_gate(node, req, network)


def tree_root_gate(root: NodeAgent, req: Request, network: NodeNetwork) -> Accept | Deny:
    """Gate a move into, out of, or back from a tree hanging at ``root``."""
    base = network.env.base
    if req.current == root.node:
        gate = root.gates[base.tree_of[req.next_node]]
        if gate.admits_entry():
            gate.moving = req.agent
            root.releasing = True
            return Accept(req.agent, req.next_node)
        return _deny(root, req, network)

    gate = root.gates[base.tree_of[req.current]]
    if gate.moving != req.agent:
        # a parked carrier asking to leave
        if not gate.admits_exit():
            return Deny(req.agent, Wait())
        if req.next_node == root.node and not network.query(root.node, root.node, req.agent):
            return Deny(req.agent, Wait())
        gate.moving = req.agent
        return Accept(req.agent, req.next_node)
    if req.next_node == root.node:
        if network.query(root.node, root.node, req.agent):
            return Accept(req.agent, req.next_node)
        return Deny(req.agent, Wait())
    return Accept(req.agent, req.next_node)


def parking_tree_phase_update(gate: TreeGate, pool_empty: bool, pending_exit: bool = False) -> bool:
    """Flip a parking tree from outbound to inbound; returns True on a flip.

    The flip waits until no carrier inside the tree still has work to do
    outside, otherwise that carrier could never leave.
    """
    if gate.parking and gate.phase == "outbound" and pool_empty and not pending_exit:
        gate.phase = "inbound"
        return True
    return False
