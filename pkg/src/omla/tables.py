"""Activation values Q and baseline values R by backward induction.

``R^delta_{u,t}`` is the expected reward machine ``u`` collects from slot
``t`` onwards, available and holding budget ``delta``, before the arrival at
``t`` is revealed. ``Q^delta_{e,l,t}`` is the same quantity conditioned on
``u`` being handed edge ``e`` at level ``l`` in slot ``t``. Both vanish for
``delta <= 0`` and ``t > T``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lp import LpSolution
from .model import Instance, is_unlimited


def _seqsum(a):
    # strictly left-to-right sum over axis 0, so a delta row never depends on how many rows
    # are computed alongside it (plain .sum() switches to pairwise summation for some shapes)
    return np.add.accumulate(a, axis=0)[-1]


def _recursion(T, D, q, r, w, pmf, theta, level_of, unlimited):
    """Backward induction shared by the original and reference systems.

    Parameters are given per *pair* ``j`` (an edge-level pair, or a level of
    the reference system) and per slot:

    q, r, w : (J, T) acceptance probability, reward, selection weight
    pmf     : (L, T) delay pmf, ``pmf[l0, d-1] = Pr{d_l = d}``
    theta   : (L,) penalties
    level_of: (J,) 0-based level of each pair

    Returns ``R`` of shape ``(D, T)`` and ``Q`` of shape ``(D, J, T)``.
    """
    J = len(level_of)
    # row 0 is the delta <= 0 boundary, column T + 1 the t > T boundary
    Rw = np.zeros((D + 1, T + 2))
    Q = np.zeros((D, J, T))
    deltas = np.arange(1, D + 1)
    if unlimited:
        rej_rows = np.ones((D, len(theta)), dtype=int) * deltas[:, None]
    else:
        rej_rows = np.clip(deltas[:, None] - np.asarray(theta)[None, :], 0, None)
    for t in range(T, 0, -1):
        nxt = Rw[1:, t + 1]
        h = T - t
        if h > 0:
            conv = _seqsum(Rw[1:, t + 1:T + 1].T[:, :, None] * pmf[:, :h].T[:, None, :])   # (D, L)
        else:
            conv = np.zeros((D, pmf.shape[0]))
        rej = Rw[rej_rows, t + 1]                              # (D, L)
        if J:
            qt, rt, wt = q[:, t - 1], r[:, t - 1], w[:, t - 1]
            Qt = qt[None, :] * (rt[None, :] + conv[:, level_of]) \
                + (1.0 - qt)[None, :] * rej[:, level_of]
            Q[:, :, t - 1] = Qt
            Rw[1:, t] = _seqsum(np.maximum(Qt, nxt[:, None]).T * wt[:, None]) + (1.0 - wt.sum()) * nxt
        else:
            Rw[1:, t] = nxt
    return Rw[1:, 1:T + 1].copy(), Q


def _lookup(arr_row, t, T):
    return 0.0 if t > T or t < 1 else float(arr_row[t - 1])


@dataclass(frozen=True)
class ValueTables:
    """Budget-indexed tables: ``R[delta-1, u, t-1]``, ``Q[delta-1, e, l-1, t-1]``.

    Machines with unlimited budget (mixed instances only) have identical rows
    for every ``delta``.
    """

    R: np.ndarray
    Q: np.ndarray
    budgets: tuple
    T: int

    @property
    def delta_max(self) -> int:
        return self.R.shape[0]

    def _row(self, delta) -> int | None:
        if is_unlimited(delta):
            return self.delta_max - 1
        if delta <= 0:
            return None
        return int(delta) - 1

    def R_at(self, u, delta, t) -> float:
        i = self._row(delta)
        return 0.0 if i is None else _lookup(self.R[i, u], t, self.T)

    def Q_at(self, e, l, delta, t) -> float:
        i = self._row(delta)
        return 0.0 if i is None else _lookup(self.Q[i, e, l - 1], t, self.T)

    def machine_value(self, u) -> float:
        return self.R_at(u, self.budgets[u], 1)

    def expected_reward(self) -> float:
        return float(sum(self.machine_value(u) for u in range(len(self.budgets))))


@dataclass(frozen=True)
class ValueTablesUnlimited:
    """Budget-free tables: ``R[u, t-1]``, ``Q[e, l-1, t-1]``."""

    R: np.ndarray
    Q: np.ndarray
    T: int

    def R_at(self, u, delta, t) -> float:
        return _lookup(self.R[u], t, self.T)

    def Q_at(self, e, l, delta, t) -> float:
        return _lookup(self.Q[e, l - 1], t, self.T)

    def machine_value(self, u) -> float:
        return self.R_at(u, None, 1)

    def expected_reward(self) -> float:
        return float(self.R[:, 0].sum()) if self.R.size else 0.0


def _machine_tables(inst: Instance, x: np.ndarray, u: int, D: int, unlimited: bool):
    T, L = inst.T, inst.L
    Eu = np.asarray(inst.edges_of_machine[u], dtype=int)
    # pairs ordered (edge, level)
    level_of = np.tile(np.arange(L), Eu.size)
    q = np.repeat(inst.q[Eu], L)[:, None] * np.ones((1, T))
    r = inst.rewards[Eu].reshape(-1)[:, None] * np.ones((1, T))
    w = x[Eu].reshape(-1, T)
    pmf = inst.delay_pmf_matrix(T)
    R, Q = _recursion(T, D, q, r, w, pmf, np.asarray(inst.theta), level_of, unlimited)
    return Eu, R, Q.reshape(D, Eu.size, L, T)


def compute_tables(instance: Instance, solution: LpSolution) -> ValueTables:
    """Tables for an instance whose budgets are all finite."""
    if not instance.all_limited:
        raise ValueError("compute_tables needs finite budgets; use compute_tables_unlimited")
    return _budgeted_tables(instance, solution)


def _budgeted_tables(instance: Instance, solution: LpSolution) -> ValueTables:
    inst = instance
    D = int(inst.delta_max) if not inst.all_unlimited else 1
    R = np.zeros((D, inst.n_machines, inst.T))
    Q = np.zeros((D, inst.n_edges, inst.L, inst.T))
    for u in range(inst.n_machines):
        unl = is_unlimited(inst.machines[u].budget)
        Eu, Ru, Qu = _machine_tables(inst, solution.x, u, 1 if unl else D, unl)
        R[:, u] = Ru
        Q[:, Eu] = Qu
    return ValueTables(R=R, Q=Q, budgets=inst.budgets, T=inst.T)


def compute_tables_unlimited(instance: Instance, solution: LpSolution) -> ValueTablesUnlimited:
    """Tables for an instance whose budgets are all unlimited."""
    inst = instance
    if not inst.all_unlimited:
        raise ValueError("compute_tables_unlimited needs every budget unlimited")
    R = np.zeros((inst.n_machines, inst.T))
    Q = np.zeros((inst.n_edges, inst.L, inst.T))
    for u in range(inst.n_machines):
        Eu, Ru, Qu = _machine_tables(inst, solution.x, u, 1, True)
        R[u] = Ru[0]
        Q[Eu] = Qu[0]
    return ValueTablesUnlimited(R=R, Q=Q, T=inst.T)


def build_tables(instance: Instance, solution: LpSolution):
    """Dispatch on the budget regime; mixed instances get :class:`ValueTables`."""
    if instance.all_unlimited:
        return compute_tables_unlimited(instance, solution)
    return _budgeted_tables(instance, solution)


def budget_monotonicity_gap(tables: ValueTables) -> float:
    """Largest ``R^{delta-1} - R^delta`` over the table (should be <= 0)."""
    if tables.R.shape[0] < 2:
        return 0.0
    return float(np.max(tables.R[:-1] - tables.R[1:]))


def dump_csv(tables, path) -> None:
    """Rows ``delta,u,t,R``; unlimited tables write ``delta=inf``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "u", "t", "R"])
        if isinstance(tables, ValueTablesUnlimited):
            for u in range(tables.R.shape[0]):
                for t in range(tables.T):
                    w.writerow(["inf", u, t + 1, repr(float(tables.R[u, t]))])
            return
        D, U, T = tables.R.shape
        for d in range(D):
            for u in range(U):
                for t in range(T):
                    w.writerow([d + 1, u, t + 1, repr(float(tables.R[d, u, t]))])
