"""
Makespan under speed fluctuation
================================

A scaled-down version of the env2 experiment: long loading times and
moves that sometimes take one or two extra timesteps.
"""

import numpy as np

from mapdfs.harness import export_plot_data, load_scenario, run_scenario

sc = load_scenario("exp2")
res = run_scenario(sc, trials=3)

table = {(m.n_agents, m.nu): m.makespan_mean for m in res.metrics}
agents = sorted({n for n, _ in table})
nus = sorted({nu for _, nu in table})
grid = np.array([[table[n, nu] for nu in nus] for n in agents])

print("rows: n_agents", agents, " columns: nu", nus)
print(np.round(grid, 1))
# relative slowdown against the noise-free column
print(np.round(grid / grid[:, :1], 3))

print(export_plot_data(res.metrics))
