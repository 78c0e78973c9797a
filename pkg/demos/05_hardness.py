# %% [markdown]
# # No online policy beats 1/(2 - eps) here
#
# One machine, two slots. Task x arrives first for sure and is worth 1. Then,
# with probability eps, task y arrives worth 1/eps; otherwise a worthless task
# z does. Any task keeps the machine busy to the end. An offline planner
# knows which one is coming. An online policy must commit at slot 1.

# %%
from omla import gen, oracle
from omla.policies import POLICY_NAMES, make_policy, prepare

for eps in (0.5, 0.1):
    inst = gen.hardness(eps)
    opt = oracle.exact_opt(inst).value
    art = prepare(inst)
    vals = {n: oracle.exact_policy_value(inst, make_policy(n, art)).value for n in POLICY_NAMES}
    print(f"eps={eps}: E[OPT]={opt:.3f}, LP(Off)={art.solution.objective:.3f}")
    for n, v in vals.items():
        print(f"   {n:>6}: {v:.3f}  (ratio {v / opt:.3f}, ceiling {1 / (2 - eps):.3f})")
