"""
A single instance, step by step
===============================

Run 22 agents on env1, check the trace with the collision replay and look
at how often the node agents had to say no.
"""

from collections import Counter

from mapdfs import SimConfig, load_bundled, orient_main_area, run_instance
from mapdfs.harness import validate_trace

env = orient_main_area(load_bundled("env1"))
result = run_instance(env, SimConfig(n_agents=22, seed=7, record_messages=True))

print("completed:", result.completed, "makespan:", result.makespan)
print(f"planner: {result.planner_calls} calls, {result.planning_time * 1e3:.1f} ms")

kinds = Counter(ev.kind for ev in result.trace)
print({k: kinds[k] for k in ("depart", "wait", "detour", "task_completed", "parked")})

report = validate_trace(result.trace, env)
print("collisions:", len(report))

# the first few messages of the negotiation
for t, sender, receiver, kind, payload in result.messages[:8]:
    print(t, sender, "->", receiver, kind, payload)

# agent 0's day, in brief
for ev in result.trace:
    if ev.agent == 0 and ev.kind in ("task_assigned", "load_start", "unload_end", "parked"):
        print(ev.t, ev.kind, ev.node, ev.task)
