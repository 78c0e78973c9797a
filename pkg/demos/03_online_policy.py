# %% [markdown]
# # The online policy against the benchmarks
#
# Each arrival samples an (edge, level) pair with probability x*/p. It is
# assigned only when the activation value is at least the baseline value of
# the next slot. Five benchmarks use the same simulator with common random
# numbers: random, the two greedy rules, and their best-level-only variants.

# %%
import numpy as np

from omla import gen, sim
from omla.policies import POLICY_NAMES, make_policy, prepare

inst = gen.synthetic(gen.SyntheticConfig(T=60, L=4, delta=10, seed=5))
art = prepare(inst)
lp_off = art.solution.objective
print(f"LP(Off) = {lp_off:.3f}, predicted OMLA reward = {art.tables.expected_reward():.3f}")

# %%
for name in POLICY_NAMES:
    s = sim.monte_carlo(inst, make_policy(name, art), n=2000, seed=0)
    print(f"{name:>6}: mean {s.mean:7.3f} +- {s.stderr:.3f}   ratio {s.mean / lp_off:.3f}")

# %% [markdown]
# One episode as an event trace. Episode i always reads the same random
# block, so every policy sees the same arrivals.

# %%
trace = sim.run_episode(inst, make_policy("omla", art), sim.RandomStream(0), episode=0)
for ev in trace.events[:12]:
    print(ev)
print("episode reward:", trace.reward, " remaining budgets:", trace.budgets)
