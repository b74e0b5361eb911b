"""Discrete-time asynchronous execution of a pickup-and-delivery instance."""

from __future__ import annotations

import heapq
import json
import random
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .graph import validate
from .orientation import OrientedEnvironment
from .planning import Path, Planner
from .protocol import (
    CarrierState,
    Depart,
    Move,
    NodeNetwork,
    Phase,
    ProtocolViolation,
    Send,
    carrier_on_reply,
    carrier_tick,
    parking_tree_phase_update,
)

__all__ = [
    "Task",
    "SimConfig",
    "TraceEvent",
    "InstanceResult",
    "TaskPool",
    "generate_tasks",
    "sample_move_duration",
    "assign_next_task",
    "execute_load_unload",
    "run_instance",
    "trace_to_jsonl",
    "trace_from_jsonl",
    "messages_to_jsonl",
]

EVENT_KINDS = (
    "depart",
    "arrive",
    "load_start",
    "load_end",
    "unload_start",
    "unload_end",
    "wait",
    "detour",
    "task_assigned",
    "task_completed",
    "parked",
)


@dataclass(frozen=True)
class Task:
    id: int
    pickup: int
    delivery: int
    material: str

    def __post_init__(self):
        if self.pickup == self.delivery:
            raise ValueError(f"task {self.id}: pickup and delivery coincide")


@dataclass(frozen=True)
class SimConfig:
    n_agents: int
    n_tasks: int = 100
    t_mv: int = 3
    t_lu: int = 3
    nu: float = 0.0
    t_nse_choices: tuple[int, ...] = (1, 2)
    timestep_limit: int = 10000
    seed: int = 0
    record_messages: bool = False

    def __post_init__(self):
        if self.t_mv < 1:
            raise ValueError("t_mv must be at least 1")
        if self.t_lu < self.t_mv:
            raise ValueError("t_lu must be at least t_mv")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError("nu must lie in [0, 1]")
        if self.n_agents < 0 or self.n_tasks < 0:
            raise ValueError("agent and task counts must be non-negative")
        if not self.t_nse_choices:
            raise ValueError("t_nse_choices must not be empty")


class TraceEvent(NamedTuple):
    t: int
    agent: int
    kind: str
    node: int | None = None
    src: int | None = None
    dst: int | None = None
    task: int | None = None

    def to_dict(self) -> dict:
        d = {"t": self.t, "agent": self.agent, "kind": self.kind}
        if self.node is not None:
            d["node"] = self.node
        if self.src is not None:
            d["from"] = self.src
        if self.dst is not None:
            d["to"] = self.dst
        if self.task is not None:
            d["task"] = self.task
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TraceEvent":
        return cls(d["t"], d["agent"], d["kind"], d.get("node"), d.get("from"), d.get("to"), d.get("task"))


@dataclass
class InstanceResult:
    completed: bool
    makespan: int | None
    planning_time: float
    trace: list[TraceEvent]
    seed: int
    config: SimConfig
    failure_reason: str | None = None
    end_time: int = 0
    tasks_completed: int = 0
    all_parked: bool = True
    planner_calls: int = 0
    messages: list[tuple] = field(default_factory=list)

    def summary(self) -> dict:
        cfg = asdict(self.config)
        cfg["t_nse_choices"] = list(cfg["t_nse_choices"])
        return {
            "completed": self.completed,
            "makespan": self.makespan,
            "planning_time": self.planning_time,
            "seed": self.seed,
            "failure_reason": self.failure_reason,
            "end_time": self.end_time,
            "tasks_completed": self.tasks_completed,
            "all_parked": self.all_parked,
            "planner_calls": self.planner_calls,
            "config": cfg,
        }


def generate_tasks(env: OrientedEnvironment, n_tasks: int, rng: random.Random) -> list[Task]:
    """Draw all tasks up front; pickup == delivery draws are redrawn."""
    pickups = env.base.pickup_nodes()
    deliveries = env.base.delivery_nodes()
    if n_tasks and (not pickups or not deliveries or (len(set(pickups) | set(deliveries)) < 2)):
        raise ValueError("environment does not have enough task endpoints")
    tasks = []
    for k in range(n_tasks):
        while True:
            p = rng.choice(pickups)
            d = rng.choice(deliveries)
            if p != d:
                break
        tasks.append(Task(k, p, d, f"m{k}"))
    return tasks


class TaskPool:
    """FIFO pool of pre-generated tasks."""

    def __init__(self, tasks: list[Task]):
        self._tasks = list(tasks)
        self._next = 0

    def __len__(self):
        return len(self._tasks) - self._next

    def pop(self) -> Task | None:
        if self._next >= len(self._tasks):
            return None
        task = self._tasks[self._next]
        self._next += 1
        return task


def sample_move_duration(config: SimConfig, rng: random.Random) -> int:
    if config.nu > 0.0 and rng.random() < config.nu:
        return config.t_mv + rng.choice(config.t_nse_choices)
    return config.t_mv


def assign_next_task(pool: TaskPool, agent: CarrierState, rng: random.Random | None = None) -> Task | None:
    """Hand the idle ``agent`` the next task, or send it home when the pool is empty.

    The pool is pre-drawn, so ``rng`` is unused; it is accepted so that
    alternative allocation policies can share the signature.
    """
    task = pool.pop()
    agent.task = task
    if task is None:
        agent.phase = Phase.TO_PARKING if agent.parking is not None else Phase.ROAMING
    else:
        agent.phase = Phase.TO_PICKUP
    return task


def execute_load_unload(agent: CarrierState, t: int, t_lu: int) -> list[TraceEvent]:
    """Events for loading (``TO_PICKUP``) or unloading (``TO_DELIVERY``) at the current node.

    The carrier keeps its node reserved for the whole interval ``[t, t + t_lu)``.
    """
    task = agent.task
    if task is None:
        raise ProtocolViolation(f"agent {agent.agent}: load/unload without a task")
    if agent.phase is Phase.TO_PICKUP:
        expected, kind = task.pickup, "load"
    elif agent.phase is Phase.TO_DELIVERY:
        expected, kind = task.delivery, "unload"
    else:
        raise ProtocolViolation(f"agent {agent.agent}: load/unload in phase {agent.phase}")
    if agent.current_node != expected:
        raise ProtocolViolation(
            f"agent {agent.agent}: {kind} at {agent.current_node}, task needs {expected}"
        )
    v = agent.current_node
    return [
        TraceEvent(t, agent.agent, f"{kind}_start", v, task=task.id),
        TraceEvent(t + t_lu, agent.agent, f"{kind}_end", v, task=task.id),
    ]


# event ordering inside one timestep
_DEPART, _ARRIVE, _WORK_END = 0, 1, 2


class _Sim:
    def __init__(self, env: OrientedEnvironment, config: SimConfig):
        self.env = env
        self.base = env.base
        self.config = config
        seed = config.seed
        self.task_rng = random.Random(f"{seed}:tasks")
        self.move_rng = random.Random(f"{seed}:moves")
        self.start_rng = random.Random(f"{seed}:starts")
        self.roam_rng = random.Random(f"{seed}:roam")
        self.network = NodeNetwork(env, random.Random(f"{seed}:detour"), record=config.record_messages)
        self.planner = Planner(env)
        self.planning_time = 0.0
        self.planner_calls = 0
        self.trace: list[TraceEvent] = []
        self.events: list[tuple] = []
        self.t = 0
        self.tasks_completed = 0
        self.makespan: int | None = None
        self.pool = TaskPool(generate_tasks(env, config.n_tasks, self.task_rng))
        self.delivery_paths: dict[int, Path] = {}
        self.idle: set[int] = set()
        self.moves: dict[int, tuple[int, int]] = {}
        self.carriers = self._place_agents()
        self.parking_gates = [
            g for a in self.network.agents.values() for g in a.gates.values() if g.parking
        ]

    def plan(self, start: int, goal: int) -> Path:
        t0 = time.perf_counter()
        path = self.planner.shortest_path(start, goal)
        self.planning_time += time.perf_counter() - t0
        self.planner_calls += 1
        return path

    def emit(self, kind: str, agent: int, **kw) -> None:
        self.trace.append(TraceEvent(self.t, agent, kind, **kw))

    def _place_agents(self) -> list[CarrierState]:
        n = self.config.n_agents
        base = self.base
        parking = base.parking_nodes
        carriers = []
        if parking:
            if len(parking) < n:
                raise ValueError(f"{n} agents but only {len(parking)} parking nodes")
            # round-robin over parking trees so small teams do not share one exit
            by_tree: dict[int, list[int]] = {}
            for v in parking:
                by_tree.setdefault(base.tree_of[v], []).append(v)
            order = []
            queues = [sorted(vs) for _, vs in sorted(by_tree.items())]
            while any(queues):
                for q in queues:
                    if q:
                        order.append(q.pop(0))
            for i in range(n):
                carriers.append(CarrierState(i, order[i], Phase.PARKED, parking=order[i]))
        else:
            main = sorted(base.main_area)
            if len(main) < n:
                raise ValueError(f"{n} agents do not fit on {len(main)} main-area nodes")
            for i, v in enumerate(self.start_rng.sample(main, n)):
                carriers.append(CarrierState(i, v, Phase.ROAMING))
                self.network.agents[v].reservation = i
        for c in carriers:
            self.trace.append(TraceEvent(0, c.agent, "arrive", c.current_node))
        return carriers

    # -- task lifecycle -------------------------------------------------
    def give_task(self, c: CarrierState) -> None:
        task = assign_next_task(self.pool, c)
        if task is not None:
            self.emit("task_assigned", c.agent, node=c.current_node, task=task.id)
            to_pickup = self.plan(c.current_node, task.pickup)
            self.delivery_paths[c.agent] = self.plan(task.pickup, task.delivery)
            c.path = to_pickup
            self.idle.add(c.agent)
            if len(to_pickup) == 1:
                self.start_work(c)
        elif c.phase is Phase.TO_PARKING:
            if c.current_node == c.parking:
                self.park(c)
            else:
                c.path = self.plan(c.current_node, c.parking)
                self.idle.add(c.agent)
        else:
            self.new_roam_target(c)

    def new_roam_target(self, c: CarrierState) -> None:
        choices = [v for v in sorted(self.base.main_area) if v != c.current_node]
        c.path = self.plan(c.current_node, self.roam_rng.choice(choices))
        self.idle.add(c.agent)

    def start_work(self, c: CarrierState) -> None:
        start, end = execute_load_unload(c, self.t, self.config.t_lu)
        self.trace.append(start)
        self.idle.discard(c.agent)
        heapq.heappush(self.events, (end.t, _WORK_END, c.agent, end))

    def finish_work(self, c: CarrierState, end: TraceEvent) -> None:
        self.trace.append(end)
        if c.phase is Phase.TO_PICKUP:
            c.phase = Phase.TO_DELIVERY
            c.path = self.delivery_paths.pop(c.agent)
            self.idle.add(c.agent)
            return
        self.emit("task_completed", c.agent, node=c.current_node, task=c.task.id)
        self.tasks_completed += 1
        self.makespan = self.t
        c.task = None
        self.give_task(c)

    def park(self, c: CarrierState) -> None:
        c.phase = Phase.PARKED
        c.path = ()
        self.idle.discard(c.agent)
        if c.gate is not None:
            self.network.gate(c.gate).release(c.agent)
            c.gate = None
        self.emit("parked", c.agent, node=c.current_node)

    def arrived(self, c: CarrierState) -> None:
        if len(c.path) > 1:
            return
        if c.phase in (Phase.TO_PICKUP, Phase.TO_DELIVERY):
            self.start_work(c)
        elif c.phase is Phase.TO_PARKING:
            self.park(c)
        elif c.phase is Phase.ROAMING:
            self.new_roam_target(c)

    # -- movement -------------------------------------------------------
    def schedule_move(self, c: CarrierState, dst: int) -> None:
        depart = self.t + 1
        arrive = depart + sample_move_duration(self.config, self.move_rng)
        self.idle.discard(c.agent)
        self.moves[c.agent] = (c.current_node, dst)
        heapq.heappush(self.events, (depart, _DEPART, c.agent, None))
        heapq.heappush(self.events, (arrive, _ARRIVE, c.agent, None))

    def do_depart(self, c: CarrierState) -> None:
        src, dst = self.moves[c.agent]
        self.emit("depart", c.agent, src=src, dst=dst)
        if src in self.base.main_area:
            self.network.agents[src].release(c.agent)
            if dst not in self.base.main_area:
                c.gate = self.base.tree_of[dst]

    def do_arrive(self, c: CarrierState) -> None:
        src, dst = self.moves.pop(c.agent)
        self.emit("arrive", c.agent, src=src, dst=dst)
        c.current_node = dst
        c.reserved_next = None
        if dst in self.base.main_area and src not in self.base.main_area and c.gate is not None:
            self.network.gate(c.gate).release(c.agent)
            c.gate = None
        self.idle.add(c.agent)
        self.arrived(c)

    def act(self, c: CarrierState) -> None:
        out = carrier_tick(c, self.env)
        if isinstance(out, Move):
            c.path = c.path[1:]
            self.schedule_move(c, out.node)
            return
        assert isinstance(out, Send)
        reply = self.network.request(out.to, out.message)
        if c.gate is None and c.current_node not in self.base.main_area:
            gate = self.network.gate(self.base.tree_of[c.current_node])
            if gate.moving == c.agent:
                c.gate = gate.index
        action = carrier_on_reply(c, reply, self.plan)
        if isinstance(action, Depart):
            if action.detour:
                self.emit("detour", c.agent, node=c.current_node, dst=action.node)
            self.schedule_move(c, action.node)
        else:
            self.emit("wait", c.agent, node=c.current_node)

    def update_parking_phases(self) -> None:
        if len(self.pool):
            return
        for gate in self.parking_gates:
            if gate.phase == "outbound":
                pending = gate.moving is not None or any(
                    c.current_node in gate.marginal and c.phase is not Phase.PARKED
                    for c in self.carriers
                )
                parking_tree_phase_update(gate, True, pending)

    def finished(self) -> bool:
        if self.tasks_completed < self.config.n_tasks:
            return False
        return all(c.phase is Phase.PARKED for c in self.carriers if c.parking is not None)

    def run(self) -> InstanceResult:
        cfg = self.config
        failure = None
        for c in self.carriers:
            self.give_task(c)
        try:
            while True:
                self.update_parking_phases()
                for agent in sorted(self.idle):
                    self.act(self.carriers[agent])
                if self.finished():
                    break
                if self.idle:
                    nxt = self.t + 1
                elif self.events:
                    nxt = self.events[0][0]
                else:
                    raise ProtocolViolation("no agent can act and no event is pending")
                if nxt > cfg.timestep_limit:
                    break
                self.t = nxt
                while self.events and self.events[0][0] == self.t:
                    _, kind, agent, payload = heapq.heappop(self.events)
                    c = self.carriers[agent]
                    if kind == _DEPART:
                        self.do_depart(c)
                    elif kind == _ARRIVE:
                        self.do_arrive(c)
                    else:
                        self.finish_work(c, payload)
                if self.finished():
                    break
        except ProtocolViolation as exc:
            failure = f"protocol violation: {exc}"
        completed = failure is None and self.tasks_completed == cfg.n_tasks
        if failure is None and not completed:
            failure = f"timestep limit {cfg.timestep_limit} exceeded"
        return InstanceResult(
            completed=completed,
            makespan=(self.makespan or 0) if completed else None,
            planning_time=self.planning_time,
            trace=self.trace,
            seed=cfg.seed,
            config=cfg,
            failure_reason=failure,
            end_time=self.t,
            tasks_completed=self.tasks_completed,
            all_parked=all(c.phase is Phase.PARKED for c in self.carriers if c.parking is not None),
            planner_calls=self.planner_calls,
            messages=self.network.messages,
        )


def run_instance(env: OrientedEnvironment, config: SimConfig) -> InstanceResult:
    """Simulate one instance from parked start to task exhaustion and return home."""
    report = validate(env.base, config.n_agents)
    if not report.ok:
        bad = [line for line in report.lines() if "FAIL" in line]
        raise ValueError("environment rejected: " + "; ".join(bad))
    return _Sim(env, config).run()


def trace_to_jsonl(trace: list[TraceEvent]) -> str:
    return "".join(json.dumps(ev.to_dict(), separators=(",", ":")) + "\n" for ev in trace)


def trace_from_jsonl(text: str) -> list[TraceEvent]:
    return [TraceEvent.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def messages_to_jsonl(messages: list[tuple]) -> str:
    lines = []
    for t, sender, receiver, kind, payload in messages:
        rec = {"t": t, "sender": sender, "receiver": receiver, "kind": kind, "payload": payload}
        lines.append(json.dumps(rec, separators=(",", ":")) + "\n")
    return "".join(lines)
