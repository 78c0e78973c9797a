"""Exact evaluators for tiny instances.

``exact_opt`` is the offline optimum: it knows the whole arrival sequence
but learns acceptance and delay outcomes only after acting.
``exact_policy_value`` is the exact expected reward of an online policy.
Both recurse over the joint state (slot, per-machine ``occupied_until``,
per-machine budget) with memoisation.
"""
from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass

from .model import Instance, is_unlimited
from .policies import DISCARD, Policy, SimState


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class TinyLimits:
    machines: int = 2
    tasks: int = 3
    T: int = 5
    L: int = 2
    delta: int = 3
    delay_support: int = 3
    max_nodes: int = 1_000_000


@dataclass(frozen=True)
class ExactValue:
    value: float
    nodes: int


def check_limits(instance: Instance, limits: TinyLimits = TinyLimits()) -> None:
    inst = instance
    problems = []
    if inst.n_machines > limits.machines:
        problems.append(f"|U|={inst.n_machines} > {limits.machines}")
    if inst.n_tasks > limits.tasks:
        problems.append(f"|V|={inst.n_tasks} > {limits.tasks}")
    if inst.T > limits.T:
        problems.append(f"T={inst.T} > {limits.T}")
    if inst.L > limits.L:
        problems.append(f"L={inst.L} > {limits.L}")
    finite = [b for b in inst.budgets if not is_unlimited(b)]
    if finite and max(finite) > limits.delta:
        problems.append(f"budget {max(finite)} > {limits.delta}")
    sup = max(d.support_max for d in inst.delays)
    if sup > limits.delay_support:
        problems.append(f"delay support {sup} > {limits.delay_support}")
    if problems:
        raise OracleLimitError("instance exceeds tiny limits: " + ", ".join(problems))


class _Counter(dict):
    def __init__(self, cap):
        super().__init__()
        self.cap = cap

    def __setitem__(self, key, value):
        super().__setitem__(key, value)
        if len(self) > self.cap:
            raise OracleLimitError(f"state space exceeds {self.cap} nodes")


def _norm(t, occ, bud, T):
    # occ entries <= t mean "available"; budgets <= 0 mean "removed"
    occ = tuple(0 if o <= t else min(o, T + 1) for o in occ)
    bud = tuple(b if b > 0 else 0 for b in bud)
    return occ, bud


def _outcomes(inst, t, occ, bud, u, l, e):
    """Yield ``(prob, reward, occ', bud')`` after assigning ``(u, l, e)`` at ``t``."""
    q = inst.edges[e].q
    r = float(inst.rewards[e, l - 1])
    if q > 0:
        pmf = inst.delays[l - 1].pmf
        for d in range(1, pmf.size + 1):
            pd = float(pmf[d - 1])
            if pd > 0:
                o2 = list(occ)
                o2[u] = t + d
                yield q * pd, r, tuple(o2), bud
    if q < 1:
        b2 = list(bud)
        b2[u] = bud[u] - inst.theta[l - 1]
        yield 1.0 - q, 0.0, occ, tuple(b2)


def exact_policy_value(instance: Instance, policy: Policy,
                       limits: TinyLimits = TinyLimits()) -> ExactValue:
    inst = instance
    check_limits(inst, limits)
    T = inst.T
    memo = _Counter(limits.max_nodes)

    def value(t, occ, bud):
        if t > T:
            return 0.0
        occ, bud = _norm(t, occ, bud, T)
        key = (t, occ, bud)
        if key in memo:
            return memo[key]
        stay = value(t + 1, occ, bud)
        p_col = inst.arrivals[:, t - 1]
        total = (1.0 - float(p_col.sum())) * stay
        for v in range(inst.n_tasks):
            pv = float(p_col[v])
            if pv <= 0:
                continue
            state = SimState(t, list(occ), list(bud))
            acc = 0.0
            for pi, dec in policy.distribution(state, v):
                if pi <= 0:
                    continue
                if dec is DISCARD:
                    acc += pi * stay
                    continue
                u, l, e = dec
                if not (t >= occ[u] and bud[u] > 0):
                    raise RuntimeError(f"{policy.name} assigned an unavailable machine")
                for po, r, o2, b2 in _outcomes(inst, t, occ, bud, u, l, e):
                    acc += pi * po * (r + value(t + 1, o2, b2))
            total += pv * acc
        memo[key] = total
        return total

    with _recursion_headroom():
        v = value(1, tuple([0] * inst.n_machines), tuple(inst.budgets))
    return ExactValue(value=v, nodes=len(memo))


def exact_opt(instance: Instance, limits: TinyLimits = TinyLimits()) -> ExactValue:
    inst = instance
    check_limits(inst, limits)
    T = inst.T
    memo = _Counter(limits.max_nodes)
    choices = []
    for t in range(T):
        col = inst.arrivals[:, t]
        opts = [(float(col[v]), v) for v in range(inst.n_tasks) if col[v] > 0]
        rest = 1.0 - sum(p for p, _ in opts)
        if rest > 0:
            opts.append((rest, None))
        choices.append(opts)

    def best(t, occ, bud, seq):
        if t > T:
            return 0.0
        occ, bud = _norm(t, occ, bud, T)
        key = (t, occ, bud, seq)
        if key in memo:
            return memo[key]
        v = seq[0]
        val = best(t + 1, occ, bud, seq[1:])
        if v is not None:
            for e in inst.edges_of_task[v]:
                u = inst.edges[e].u
                if not (t >= occ[u] and bud[u] > 0):
                    continue
                for l in range(1, inst.L + 1):
                    cand = sum(po * (r + best(t + 1, o2, b2, seq[1:]))
                               for po, r, o2, b2 in _outcomes(inst, t, occ, bud, u, l, e))
                    if cand > val:
                        val = cand
        memo[key] = val
        return val

    total = 0.0
    start_occ = tuple([0] * inst.n_machines)
    start_bud = tuple(inst.budgets)
    with _recursion_headroom():
        for combo in itertools.product(*choices):
            prob = 1.0
            for p, _ in combo:
                prob *= p
            if prob == 0.0:
                continue
            seq = tuple(v for _, v in combo)
            total += prob * best(1, start_occ, start_bud, seq)
    return ExactValue(value=total, nodes=len(memo))


class _recursion_headroom:
    def __enter__(self):
        self.old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(self.old, 10_000))

    def __exit__(self, *exc):
        sys.setrecursionlimit(self.old)
