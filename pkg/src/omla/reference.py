"""Per-machine reference system used only for bound checking.

Each machine is paired with a single-machine surrogate in which at most one
of ``L`` level-specific tasks arrives per slot. Its arrival, acceptance and
reward parameters are aggregated from the LP solution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LpSolution
from .model import Instance, is_unlimited
from .tables import _lookup, _recursion


@dataclass(frozen=True)
class RefParams:
    """Arrays of shape ``(|U|, L, T)``."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class RefTables:
    """``R[delta-1, u, t-1]`` and ``Q[delta-1, u, l-1, t-1]``.

    Unlimited machines carry identical rows for every ``delta``; ``unlimited``
    marks the all-unlimited layout where ``delta`` has a single row.
    """

    R: np.ndarray
    Q: np.ndarray
    budgets: tuple
    T: int
    unlimited: bool = False

    def _row(self, delta):
        if self.unlimited or is_unlimited(delta):
            return self.R.shape[0] - 1
        if delta <= 0:
            return None
        return int(delta) - 1

    def R_at(self, u, delta, t) -> float:
        i = self._row(delta)
        return 0.0 if i is None else _lookup(self.R[i, u], t, self.T)

    def Q_at(self, u, l, delta, t) -> float:
        i = self._row(delta)
        return 0.0 if i is None else _lookup(self.Q[i, u, l - 1], t, self.T)

    def machine_value(self, u) -> float:
        return self.R_at(u, self.budgets[u], 1)


def ref_params(instance: Instance, solution: LpSolution) -> RefParams:
    inst = instance
    x = solution.x
    U, L, T = inst.n_machines, inst.L, inst.T
    p = np.zeros((U, L, T))
    qx = np.zeros((U, L, T))
    qrx = np.zeros((U, L, T))
    for e in inst.edges:
        p[e.u] += x[e.id]
        qx[e.u] += e.q * x[e.id]
        qrx[e.u] += e.q * inst.rewards[e.id][:, None] * x[e.id]
    q = np.zeros_like(p)
    pos = p > 0
    q[pos] = qx[pos] / p[pos]
    r = np.zeros_like(p)
    pq = p * q
    pos = pq > 0
    r[pos] = qrx[pos] / pq[pos]
    return RefParams(p=p, q=q, r=r)


def ref_tables(instance: Instance, params: RefParams) -> RefTables:
    inst = instance
    U, L, T = inst.n_machines, inst.L, inst.T
    unlimited = inst.all_unlimited
    D = 1 if unlimited else int(inst.delta_max)
    R = np.zeros((D, U, T))
    Q = np.zeros((D, U, L, T))
    pmf = inst.delay_pmf_matrix(T)
    theta = np.asarray(inst.theta)
    levels = np.arange(L)
    for u in range(U):
        unl = is_unlimited(inst.machines[u].budget)
        Ru, Qu = _recursion(T, 1 if unl else D, params.q[u], params.r[u], params.p[u],
                            pmf, theta, levels, unl)
        R[:, u] = Ru
        Q[:, u] = Qu
    return RefTables(R=R, Q=Q, budgets=inst.budgets, T=T, unlimited=unlimited)
