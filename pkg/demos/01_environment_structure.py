"""
Main area, trees and the structural checks
==========================================

Load a bundled environment, look at how it splits into bi-connected
components and pendant trees, then run the validation report for a few
team sizes.
"""

from mapdfs import load_bundled, validate

g = load_bundled("env1")
print(g)

# the main area is the union of the components; everything else hangs off it
print("components:", [len(c) for c in g.components])
print("main area:", len(g.main_area), "nodes, marginal zone:", len(g.marginal_zone), "nodes")

# each tree touches the main area at exactly one root
for tree in g.trees[:3]:
    kinds = sorted({g.nodes[v].kind for v in tree.marginal})
    print(f"tree at root {tree.root}: {sorted(tree.marginal)} {kinds}")

for n in (22, 40, 59):
    report = validate(g, n)
    print(f"\nn={n}: ok={report.ok} margin={report.open_node_margin}")
    print("\n".join("  " + line for line in report.lines()))

###############################################################################
# The smallest bundled layout runs with the thinnest possible margin.

small = load_bundled("env4")
print("\nenv4 components:", [sorted(c) for c in small.components])
print("margin with 8 agents:", validate(small, 8).open_node_margin)
