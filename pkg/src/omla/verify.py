"""Numerical check of every testable inequality in the competitive analysis.

Each check is phrased as ``lhs >= rhs``; its slack is
``(lhs - rhs) / max(1, |rhs|)`` and it passes iff ``slack >= -tol``.
Entrywise checks keep only the worst entry and its index.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .lp import build_off, machine_contribution, max_residual, solve
from .model import Instance, is_unlimited, require_valid
from .oracle import OracleLimitError, check_limits, exact_opt
from .reference import ref_params, ref_tables
from .tables import build_tables


def competitive_constant(instance: Instance) -> float:
    """1/2 when every budget is unlimited, else Delta/(3 Delta - 1) for the largest finite budget."""
    if instance.all_unlimited:
        return 0.5
    d = float(instance.delta_max)
    return d / (3.0 * d - 1.0)


def machine_constant(budget) -> float:
    return 0.5 if is_unlimited(budget) else budget / (3.0 * budget - 1.0)


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    where: str = ""


@dataclass
class BoundReport:
    checks: list = field(default_factory=list)
    tol: float = 1e-7

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list:
        return [c.name for c in self.checks]

    def to_json(self) -> str:
        return json.dumps({"ok": self.ok, "tol": self.tol,
                           "checks": [asdict(c) for c in self.checks]}, indent=1)

    def table(self) -> str:
        rows = [f"{'check':<26} {'lhs':>14} {'rhs':>14} {'slack':>12}  result  where"]
        for c in self.checks:
            rows.append(f"{c.name:<26} {c.lhs:>14.8g} {c.rhs:>14.8g} {c.slack:>12.3e}  "
                        f"{'pass' if c.passed else 'FAIL':<6}  {c.where}")
        rows.append("overall: " + ("pass" if self.ok else "FAIL"))
        return "\n".join(rows)


def _scalar(name, lhs, rhs, tol, where=""):
    slack = (lhs - rhs) / max(1.0, abs(rhs))
    return Check(name, float(lhs) + 0.0, float(rhs) + 0.0, float(slack) + 0.0, bool(slack >= -tol), where)


def _worst(name, lhs, rhs, tol, index_names):
    """Entrywise ``lhs >= rhs`` over equally shaped arrays."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.size == 0:
        return Check(name, 0.0, 0.0, 0.0, True, "no entries")
    slack = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    k = int(np.argmin(slack))
    idx = np.unravel_index(k, slack.shape)
    # delta, t and l are reported 1-based like everywhere else
    where = ", ".join(f"{n}={i + 1 if n in ('delta', 't', 'l') else i}"
                      for n, i in zip(index_names, idx))
    # "+ 0.0" turns a negative zero into a plain zero for display
    return Check(name, float(lhs.flat[k]) + 0.0, float(rhs.flat[k]) + 0.0, float(slack.flat[k]) + 0.0,
                 bool(slack.flat[k] >= -tol), where)


def check_all(instance: Instance, tol: float = 1e-7, solution=None, run_oracle=None,
              backend: str = "highs", opt_value: float | None = None) -> BoundReport:
    """Evaluate the whole chain of bounds for one instance.

    ``solution`` overrides the LP optimum (for negative controls); by default
    the LP is solved here. ``run_oracle`` defaults to "if the instance is tiny".
    """
    require_valid(instance)
    inst = instance
    problem = build_off(inst)
    if solution is None:
        solution = solve(problem, tol=tol, backend=backend)
    lp_value = float(problem.c @ solution.x.reshape(-1))
    report = BoundReport(tol=tol)
    checks = report.checks

    checks.append(_scalar("x feasible", -max_residual(problem, solution.x), 0.0, tol,
                          "worst constraint residual"))

    l1 = None
    if run_oracle is None:
        try:
            check_limits(inst)
            run_oracle = True
        except OracleLimitError:
            run_oracle = False
    if run_oracle or opt_value is not None:
        opt = exact_opt(inst).value if opt_value is None else opt_value
        l1 = _scalar("L1 LP(Off) >= E[OPT]", lp_value, opt, tol)
        checks.append(l1)

    tables = build_tables(inst, solution)
    params = ref_params(inst, solution)
    ref = ref_tables(inst, params)
    contrib = machine_contribution(inst, solution)
    U = inst.n_machines
    unl = np.array([is_unlimited(b) for b in inst.budgets], dtype=bool)

    # L2: R >= R~ at every (delta, u, t)
    if inst.all_unlimited:
        R_orig = tables.R[None]
    else:
        R_orig = tables.R
    l2 = _worst("L2 R >= R_ref", R_orig, ref.R, tol, ("delta", "u", "t"))
    checks.append(l2)

    lower_checks = []
    if unl.any():
        lhs = np.array([ref.machine_value(u) for u in range(U)])[unl]
        rhs = 0.5 * contrib[unl]
        c = _worst("L3 R_ref >= 1/2 contrib", lhs, rhs, tol, ("machine#",))
        checks.append(c)
        lower_checks.append(c)
    if (~unl).any():
        D = ref.R.shape[0]
        deltas = np.arange(1, D + 1)
        lhs_all, rhs_all = [], []
        for l0, th in enumerate(inst.theta):
            low = deltas - th
            lo_rows = np.zeros_like(ref.R)
            ok_rows = low >= 1
            lo_rows[ok_rows] = ref.R[low[ok_rows] - 1]
            factor = (low / deltas)[:, None, None]
            lhs_all.append(lo_rows[:, ~unl])
            rhs_all.append(factor * ref.R[:, ~unl])
        lhs5 = np.stack(lhs_all, axis=-1)   # (delta, u, t, l)
        rhs5 = np.stack(rhs_all, axis=-1)
        checks.append(_worst("L5 induction inequality", lhs5, rhs5, tol, ("delta", "u#", "t", "l")))
        idx = np.flatnonzero(~unl)
        lhs = np.array([ref.machine_value(u) for u in idx])
        rhs = np.array([machine_constant(inst.budgets[u]) for u in idx]) * contrib[idx]
        c = _worst("L6 R_ref >= c_u contrib", lhs, rhs, tol, ("machine#",))
        checks.append(c)
        lower_checks.append(c)

    alg = tables.expected_reward()
    per_machine = np.array([machine_constant(b) for b in inst.budgets])
    aux_rhs = float(np.dot(per_machine, contrib))
    inputs_ok = l2.passed and all(c.passed for c in lower_checks) and (l1 is None or l1.passed)
    aux_name = "L4 auxiliary (composed)" if inst.all_unlimited else "L7 auxiliary (composed)"
    aux = _scalar(aux_name, alg, aux_rhs, tol, "from L1, L2, L3/L6")
    aux.passed = aux.passed and inputs_ok
    checks.append(aux)

    const = competitive_constant(inst)
    thm = "T1 ratio >= 1/2" if inst.all_unlimited else "T2 ratio >= D/(3D-1)"
    if lp_value > 0:
        checks.append(_scalar(thm, alg / lp_value, const, tol, f"E[ALG]={alg:.6g}, LP={lp_value:.6g}"))
    else:
        checks.append(Check(thm, const, const, 0.0, True, "LP(Off)=0, vacuous"))
    return report
