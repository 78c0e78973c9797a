# %% [markdown]
# # Checking the bounds numerically
#
# The verification harness evaluates each inequality of the competitive
# analysis on a concrete instance. It reports the worst entry and its slack.
# On tiny instances it also enumerates the exact offline optimum.

# %%
from omla import gen, verify
from omla.model import DelayDist, make_instance

print(verify.check_all(gen.tiny(3)).table())

# %%
print(verify.check_all(gen.synthetic(gen.SyntheticConfig(n_machines=5, n_tasks=10, T=30, L=3,
                                                          delta=4, seed=7))).table())

# %% [markdown]
# The limited-budget bound can break when levels carry different rejection
# penalties. The budget row of the LP charges only an expected penalty, and
# at tiny budgets that is looser than the budget actually spent. On this
# one-machine instance the ratio drops below 1/2. The harness flags it.

# %%
inst = make_instance(T=5, L=2, budgets=[1], n_tasks=1, edges=[(0, 0, 0.5)], rewards=[[1.0, 1.01]],
                     theta=[1, 3], arrivals=[[1.0] * 5], delays=[DelayDist.point(1), DelayDist.point(2)])
print(verify.check_all(inst).table())

# %% [markdown]
# With equal penalties on both levels the same instance is tight at exactly 1/2.

# %%
print(verify.check_all(inst.replace(theta=(3, 3))).table())
