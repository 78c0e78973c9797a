"""Independent evaluators used as test oracles.

Nothing here imports the library's LP builder, tables or reference code:
each quantity is recomputed from its definition with plain loops.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from omla.lp import LpSolution
from omla.model import DelayDist, UNLIMITED, make_instance
from omla.policies import DISCARD, Assign, Policy


def pmf(inst, l, d):
    """Pr{d_l = d}, 1-based level and delay."""
    arr = inst.delays[l - 1].pmf
    return float(arr[d - 1]) if 1 <= d <= len(arr) else 0.0


def tail_ge(inst, l, k):
    """Pr{d_l >= k}."""
    if k <= 1:
        return 1.0
    return float(sum(pmf(inst, l, d) for d in range(k, len(inst.delays[l - 1].pmf) + 1)))


def naive_lp(inst):
    """Dense (A, b, c) of the offline LP assembled row by row from the definitions."""
    E, L, T = inst.n_edges, inst.L, inst.T
    idx = {}
    for e in range(E):
        for l in range(1, L + 1):
            for t in range(1, T + 1):
                idx[e, l, t] = len(idx)
    n = len(idx)
    c = np.zeros(n)
    for (e, l, t), j in idx.items():
        c[j] = inst.edges[e].q * inst.rewards[e, l - 1]
    theta = max(inst.theta)
    A, b = [], []
    for u in range(inst.n_machines):
        Eu = [ed for ed in inst.edges if ed.u == u]
        for t in range(1, T + 1):
            row = np.zeros(n)
            for ed in Eu:
                for l in range(1, L + 1):
                    for tp in range(1, t):
                        row[idx[ed.id, l, tp]] += ed.q * tail_ge(inst, l, t - tp + 1)
                    row[idx[ed.id, l, t]] += ed.q
            A.append(row)
            b.append(1.0)
        budget = inst.machines[u].budget
        if not math.isinf(budget):
            row = np.zeros(n)
            for ed in Eu:
                for l in range(1, L + 1):
                    for t in range(1, T + 1):
                        over = tail_ge(inst, l, T - t + 1)
                        row[idx[ed.id, l, t]] += theta * ed.q * over + (1 - ed.q) * inst.theta[l - 1]
            A.append(row)
            b.append(budget + theta - 1)
    for v in range(inst.n_tasks):
        for t in range(1, T + 1):
            row = np.zeros(n)
            for ed in inst.edges:
                if ed.v == v:
                    for l in range(1, L + 1):
                        row[idx[ed.id, l, t]] = 1.0
            A.append(row)
            b.append(inst.arrivals[v, t - 1])
    for ed in inst.edges:
        for t in range(1, T + 1):
            row = np.zeros(n)
            for l in range(1, L + 1):
                row[idx[ed.id, l, t]] = 1.0
            A.append(row)
            b.append(inst.arrivals[ed.v, t - 1])
    for u in range(inst.n_machines):
        for t in range(1, T + 1):
            row = np.zeros(n)
            for ed in inst.edges:
                if ed.u == u:
                    for l in range(1, L + 1):
                        row[idx[ed.id, l, t]] = 1.0
            A.append(row)
            b.append(1.0)
    return np.array(A), np.array(b), c


def naive_lp_value(inst):
    A, b, c = naive_lp(inst)
    res = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs-ipm")
    assert res.status == 0
    return -res.fun


def naive_values(inst, x):
    """R(u, delta, t) and Q(e, l, delta, t) by memoized recursion.

    ``delta`` is ignored for unlimited machines.
    """
    T = inst.T
    edges_of = {u: [ed for ed in inst.edges if ed.u == u] for u in range(inst.n_machines)}

    @lru_cache(maxsize=None)
    def R(u, delta, t):
        unl = math.isinf(inst.machines[u].budget)
        if t > T or (not unl and delta <= 0):
            return 0.0
        nxt = R(u, delta, t + 1)
        total, mass = 0.0, 0.0
        for ed in edges_of[u]:
            for l in range(1, inst.L + 1):
                xv = float(x[ed.id, l - 1, t - 1])
                total += xv * max(Q(ed.id, l, delta, t), nxt)
                mass += xv
        return total + (1.0 - mass) * nxt

    @lru_cache(maxsize=None)
    def Q(e, l, delta, t):
        ed = inst.edges[e]
        unl = math.isinf(inst.machines[ed.u].budget)
        if not unl and delta <= 0:
            return 0.0
        acc = inst.rewards[e, l - 1]
        for d in range(1, T - t + 1):
            acc += pmf(inst, l, d) * R(ed.u, delta, t + d)
        after = R(ed.u, delta if unl else delta - inst.theta[l - 1], t + 1)
        return ed.q * acc + (1 - ed.q) * after

    return R, Q


def naive_ref(inst, x):
    """(p', q', r') and the reference recursion R~(u, delta, t)."""
    U, L, T = inst.n_machines, inst.L, inst.T
    p = np.zeros((U, L, T))
    q = np.zeros((U, L, T))
    r = np.zeros((U, L, T))
    for u in range(U):
        for l in range(L):
            for t in range(T):
                es = [ed for ed in inst.edges if ed.u == u]
                pp = sum(x[ed.id, l, t] for ed in es)
                qq = sum(ed.q * x[ed.id, l, t] for ed in es) / pp if pp > 0 else 0.0
                rr = (sum(ed.q * inst.rewards[ed.id, l] * x[ed.id, l, t] for ed in es) / (pp * qq)
                      if pp * qq > 0 else 0.0)
                p[u, l, t], q[u, l, t], r[u, l, t] = pp, qq, rr

    @lru_cache(maxsize=None)
    def Rt(u, delta, t):
        unl = math.isinf(inst.machines[u].budget)
        if t > T or (not unl and delta <= 0):
            return 0.0
        nxt = Rt(u, delta, t + 1)
        total = 0.0
        for l in range(1, L + 1):
            pl = p[u, l - 1, t - 1]
            total += pl * max(Qt(u, l, delta, t), nxt) + (-pl) * nxt
        return total + nxt

    @lru_cache(maxsize=None)
    def Qt(u, l, delta, t):
        unl = math.isinf(inst.machines[u].budget)
        qq, rr = q[u, l - 1, t - 1], r[u, l - 1, t - 1]
        acc = rr + sum(pmf(inst, l, d) * Rt(u, delta, t + d) for d in range(1, T - t + 1))
        after = Rt(u, delta if unl else delta - inst.theta[l - 1], t + 1)
        return qq * acc + (1 - qq) * after

    return (p, q, r), Rt


def given_solution(x, objective=float("nan")):
    x = np.asarray(x, dtype=float)
    return LpSolution(x=x, objective=objective, status="given", backend="manual")


def hand_instance():
    """One machine, one edge, L=1, T=2, Delta=1, theta=1, q=0.5, r=4, d=1 surely."""
    return make_instance(T=2, L=1, budgets=[1], n_tasks=1, edges=[(0, 0, 0.5)], rewards=[[4.0]],
                         theta=[1], arrivals=[[1.0, 1.0]], delays=[DelayDist.point(1)])


HAND_X = np.array([[[0.5, 0.5]]])


def single_slot(q=1.0, r=5.0, budget=1, p=1.0):
    return make_instance(T=1, L=1, budgets=[budget], n_tasks=1, edges=[(0, 0, q)], rewards=[[r]],
                         theta=[1], arrivals=[[p]], delays=[DelayDist.point(1)])


class AlwaysAssign(Policy):
    """Assign every arrival of ``task`` to the first free adjacent machine at level 1."""

    name = "always"

    def __init__(self, instance, task=0):
        self.instance = instance
        self.task = task

    def distribution(self, state, v):
        if v == self.task:
            for ed in self.instance.edges:
                if ed.v == v and state.free(ed.u):
                    return [(1.0, Assign(ed.u, 1, ed.id))]
        return [(1.0, DISCARD)]


def small_family(n=20):
    """The seeded small-instance family shared by the bound checks."""
    from omla import gen
    out = []
    for s in range(n):
        rng = np.random.default_rng(1000 + s)
        U, V = int(rng.integers(2, 6)), int(rng.integers(3, 9))
        T, L, D = int(rng.integers(5, 21)), int(rng.integers(1, 4)), int(rng.integers(1, 5))
        for delta in (D, UNLIMITED):
            cfg = gen.SyntheticConfig(n_machines=U, n_tasks=V, T=T, L=L, edge_prob=0.4, delta=delta, seed=s)
            out.append(gen.synthetic(cfg))
    return out
