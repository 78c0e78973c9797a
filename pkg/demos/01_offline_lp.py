# %% [markdown]
# # The offline LP
#
# A synthetic instance has machines, tasks, and edges with an acceptance
# probability. Every edge offers several processing levels. We build the
# offline LP and solve it. The optimum upper-bounds what any policy can expect
# to earn, and its solution x* drives the online policy later on.

# %%
import numpy as np

from omla import gen, lp

inst = gen.synthetic(gen.SyntheticConfig(n_machines=5, n_tasks=10, T=30, L=3, edge_prob=0.3,
                                         delta=4, seed=1))
print(inst.n_machines, "machines,", inst.n_tasks, "tasks,", inst.n_edges, "edges")
print("budgets:", inst.budgets, " penalties:", inst.theta)
print("expected delay per level:", np.round(inst.expected_delays, 2))

# %% [markdown]
# There is one column per (edge, level, slot). Rows come in five families.

# %%
prob = lp.build_off(inst)
print(prob.n_rows, "rows x", prob.n_cols, "columns")
for fam in (lp.OCCUPANCY, lp.BUDGET, lp.ARRIVAL_TASK, lp.ARRIVAL_EDGE, lp.MACHINE_SLOT):
    print(f"  {fam:<14} {len(prob.rows_of(fam)):4d} rows")

# %% [markdown]
# HiGHS is the default solver. The bundled dense simplex gives the same optimum.

# %%
sol = lp.solve(prob)
print("LP(Off) =", sol.objective)
print("worst residual per family:", {k: f"{v:.1e}" for k, v in lp.residuals(prob, sol.x).items()})

small = gen.synthetic(gen.SyntheticConfig(n_machines=3, n_tasks=5, T=10, L=2, edge_prob=0.5, seed=3))
a = lp.solve_instance(small, backend="highs").objective
b = lp.solve_instance(small, backend="simplex").objective
print(f"cross-check on a reduced instance: highs {a:.10f}  simplex {b:.10f}")

# %% [markdown]
# How the LP splits its mass over levels. Higher levels pay more but keep
# the machine busy longer.

# %%
print("mass per level:", np.round(sol.x.sum(axis=(0, 2)), 3))
print("per-machine contribution:", np.round(lp.machine_contribution(inst, sol), 3))
