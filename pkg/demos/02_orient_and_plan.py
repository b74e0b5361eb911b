"""
One-way main area and shortest paths
====================================
"""

from mapdfs import Planner, load_bundled, orient_main_area, verify_strong_connectivity

g = load_bundled("env2")
env = orient_main_area(g, seed=0)
print(len(env.arcs), "main-area edges directed; strongly connected:", verify_strong_connectivity(env))

# a different seed gives a different, equally valid orientation
other = orient_main_area(g, seed=1)
flipped = sum(env.arcs[k] != other.arcs[k] for k in env.arcs)
print(flipped, "edges point the other way under seed 1")

planner = Planner(env)
a, b = 0, 49
there = planner.shortest_path(a, b)
back = planner.shortest_path(b, a)
# one-way streets: the two directions need not have the same length
print(f"{a} -> {b}: {len(there) - 1} hops", there)
print(f"{b} -> {a}: {len(back) - 1} hops", back)

# tree nodes are reached through their root, both ways
leaf = g.parking_nodes[0]
print("to a parking node:", planner.shortest_path(a, leaf))
