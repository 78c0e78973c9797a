# %% [markdown]
# # Activation and baseline values
#
# Backward induction gives R (the value of a machine with remaining budget
# delta at slot t) and Q (the value of assigning a given edge and level now).
# Start with a case small enough to check by hand. It has one machine and
# one edge, T=2, q=0.5, r=4, and the task finishes in one slot. The budget
# allows a single rejection, and x* = 0.5 in both slots.

# %%
import numpy as np

from omla import gen, lp, tables
from omla.lp import LpSolution
from omla.model import DelayDist, make_instance

inst = make_instance(T=2, L=1, budgets=[1], n_tasks=1, edges=[(0, 0, 0.5)], rewards=[[4.0]],
                     theta=[1], arrivals=[[1.0, 1.0]], delays=[DelayDist.point(1)])
sol = LpSolution(x=np.array([[[0.5, 0.5]]]), objective=float("nan"), status="given", backend="manual")
tb = tables.build_tables(inst, sol)
print("R at t=2:", tb.R_at(0, 1, 2))           # 0.5 * (0.5 * 4) = 1
print("Q at t=1:", tb.Q_at(0, 1, 1, 1))        # 0.5 * (4 + 1) + 0.5 * 0 = 2.5
print("R at t=1:", tb.R_at(0, 1, 1))           # 0.5 * max(2.5, 1) + 0.5 * 1 = 1.75

# %% [markdown]
# On a generated instance, R falls as time runs out and rises with the
# remaining budget.

# %%
inst = gen.synthetic(gen.SyntheticConfig(n_machines=4, n_tasks=8, T=40, L=2, edge_prob=0.4, delta=5, seed=2))
sol = lp.solve_instance(inst)
tb = tables.build_tables(inst, sol)
u = int(np.argmax(inst.budgets))
for delta in range(1, int(inst.budgets[u]) + 1):
    print(f"delta={delta}: R_(u,1)={tb.R_at(u, delta, 1):.4f}  R_(u,20)={tb.R_at(u, delta, 20):.4f}")
print("budget monotonicity gap:", tables.budget_monotonicity_gap(tb))

# %% [markdown]
# The sum over machines of R at full budget and t=1 is exactly the expected
# reward of the online policy. Compare it with the LP bound.

# %%
print("sum_u R =", tb.expected_reward(), "  LP(Off) =", sol.objective,
      "  ratio =", tb.expected_reward() / sol.objective)
