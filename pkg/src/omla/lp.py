"""The offline LP relaxation and its solution.

Columns are indexed ``(e, l, t)`` in edge-major order; ``x[e, l-1, t-1]`` in
the returned solution is the probability mass of assigning edge ``e`` at
level ``l`` in slot ``t``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import Instance, is_unlimited, require_valid
from .simplex import simplex_max

log = logging.getLogger(__name__)

OCCUPANCY = "occupancy"
BUDGET = "budget"
ARRIVAL_TASK = "arrival-task"
ARRIVAL_EDGE = "arrival-edge"
MACHINE_SLOT = "machine-per-slot"
FAMILIES = (OCCUPANCY, BUDGET, ARRIVAL_TASK, ARRIVAL_EDGE, MACHINE_SLOT)

CLAMP = 1e-12


@dataclass
class LpProblem:
    """``max c.x`` subject to ``A x <= b``, ``0 <= x <= ub``."""

    shape: tuple[int, int, int]          # (|E|, L, T)
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    family: np.ndarray                   # one tag per row
    ub: np.ndarray                       # 0 for columns fixed out by a level mask
    row_key: list = field(default_factory=list)

    @property
    def n_cols(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def col(self, e: int, l: int, t: int) -> int:
        E, L, T = self.shape
        return (e * L + (l - 1)) * T + (t - 1)

    def rows_of(self, family: str) -> np.ndarray:
        return np.flatnonzero(self.family == family)


@dataclass
class LpSolution:
    x: np.ndarray                        # shape (|E|, L, T)
    objective: float
    status: str
    backend: str = ""

    def flat(self) -> np.ndarray:
        return self.x.reshape(-1)


def build_off(instance: Instance, level_mask: np.ndarray | None = None) -> LpProblem:
    """Assemble the five constraint families of the offline LP.

    ``level_mask`` (shape ``(|E|, L)``, boolean) restricts each edge to the
    allowed levels; disallowed columns get an upper bound of 0.
    """
    require_valid(instance)
    inst = instance
    E, L, T = inst.n_edges, inst.L, inst.T
    n = E * L * T
    q = inst.q

    def col(e, l0, t0):
        return (e * L + l0) * T + t0

    c = np.zeros(n)
    for e in range(E):
        for l0 in range(L):
            c[col(e, l0, 0):col(e, l0, 0) + T] = q[e] * inst.rewards[e, l0]

    rows, cols, vals, b, fam, keys = [], [], [], [], [], []

    def add_row(entries, rhs, family, key):
        r = len(b)
        for j, v in entries:
            if v != 0.0:
                rows.append(r)
                cols.append(j)
                vals.append(v)
        b.append(rhs)
        fam.append(family)
        keys.append(key)

    tail = inst.delay_tail_matrix(T + 1)   # tail[l0, k-1] = Pr{d_l >= k}
    theta_max = inst.theta_max

    for u in range(inst.n_machines):
        Eu = inst.edges_of_machine[u]
        for t0 in range(T):
            entries = []
            for e in Eu:
                for l0 in range(L):
                    for s0 in range(t0):
                        # assigned at t' = s0+1, still busy at t = t0+1 iff d >= t - t' + 1
                        entries.append((col(e, l0, s0), q[e] * tail[l0, t0 - s0]))
                    entries.append((col(e, l0, t0), q[e]))
            add_row(entries, 1.0, OCCUPANCY, (u, t0 + 1))
        budget = inst.machines[u].budget
        if not is_unlimited(budget):
            entries = []
            for e in Eu:
                for l0 in range(L):
                    for t0 in range(T):
                        # Pr{d_l > T - t} = Pr{d_l >= T - t + 1}
                        over = tail[l0, T - (t0 + 1)]
                        coef = theta_max * q[e] * over + (1.0 - q[e]) * inst.theta[l0]
                        entries.append((col(e, l0, t0), coef))
            add_row(entries, float(budget + theta_max - 1), BUDGET, (u,))

    for v in range(inst.n_tasks):
        Ev = inst.edges_of_task[v]
        for t0 in range(T):
            entries = [(col(e, l0, t0), 1.0) for e in Ev for l0 in range(L)]
            add_row(entries, float(inst.arrivals[v, t0]), ARRIVAL_TASK, (v, t0 + 1))
    for e in range(E):
        v = inst.edges[e].v
        for t0 in range(T):
            entries = [(col(e, l0, t0), 1.0) for l0 in range(L)]
            add_row(entries, float(inst.arrivals[v, t0]), ARRIVAL_EDGE, (e, t0 + 1))
    for u in range(inst.n_machines):
        Eu = inst.edges_of_machine[u]
        for t0 in range(T):
            entries = [(col(e, l0, t0), 1.0) for e in Eu for l0 in range(L)]
            add_row(entries, 1.0, MACHINE_SLOT, (u, t0 + 1))

    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(b), n))
    ub = np.full(n, np.inf)
    if level_mask is not None:
        mask = np.asarray(level_mask, dtype=bool).reshape(E, L)
        ub = np.where(np.repeat(mask.reshape(-1), T), np.inf, 0.0)
    return LpProblem(shape=(E, L, T), c=c, A=A, b=np.asarray(b, dtype=float),
                     family=np.asarray(fam), ub=ub, row_key=keys)


def residuals(problem: LpProblem, x) -> dict:
    """Worst violation per constraint family, recomputed from scratch.

    Includes ``"nonnegativity"`` and ``"bounds"`` entries.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    lhs = problem.A @ x
    viol = lhs - problem.b
    out = {}
    for f in FAMILIES:
        idx = problem.rows_of(f)
        out[f] = float(max(0.0, viol[idx].max())) if idx.size else 0.0
    out["nonnegativity"] = float(max(0.0, -x.min())) if x.size else 0.0
    fixed = np.isfinite(problem.ub)
    out["bounds"] = float(max(0.0, (x[fixed] - problem.ub[fixed]).max())) if fixed.any() else 0.0
    return out


def max_residual(problem: LpProblem, x) -> float:
    return max(residuals(problem, x).values())


def _repair(problem: LpProblem, x: np.ndarray) -> np.ndarray:
    """Clamp dust and shrink ``x`` onto the feasible region.

    Every coefficient is nonnegative, so scaling down preserves all ``<=``
    rows; rows with a zero right-hand side pin their columns to 0.
    """
    x = np.where(x < CLAMP, 0.0, x)
    x[problem.ub == 0.0] = 0.0
    zero_rows = np.flatnonzero(problem.b <= 0.0)
    if zero_rows.size:
        pinned = np.unique(problem.A[zero_rows].indices)
        x[pinned] = 0.0
    lhs = problem.A @ x
    pos = problem.b > 0
    if pos.any():
        ratio = float((lhs[pos] / problem.b[pos]).max())
        if ratio > 1.0:
            x = x / ratio
    return x


def solve(problem: LpProblem, tol: float = 1e-7, backend: str = "highs") -> LpSolution:
    """Solve to optimality.

    ``backend`` is ``"highs"`` (scipy's HiGHS interior point with crossover, so
    the answer is a vertex) or ``"simplex"``
    (the bundled dense tableau, for desk-scale problems and cross-checks).
    """
    n = problem.n_cols
    if backend == "highs":
        res = linprog(-problem.c, A_ub=problem.A, b_ub=problem.b,
                      bounds=np.column_stack([np.zeros(n), problem.ub]),
                      method="highs-ipm",
                      options={"primal_feasibility_tolerance": min(tol, 1e-7),
                               "dual_feasibility_tolerance": min(tol, 1e-7),
                               "presolve": True})
        if res.status == 2:
            status = "infeasible"
        elif res.status == 3:
            status = "unbounded"
        elif res.status != 0:
            raise RuntimeError(f"LP solver failed: {res.message}")
        else:
            status = "optimal"
        x = res.x if status == "optimal" else None
    elif backend == "simplex":
        keep = np.flatnonzero(problem.ub != 0.0)
        A = problem.A[:, keep].toarray()
        status, xk, _, iters = simplex_max(problem.c[keep], A, problem.b)
        log.debug("dense simplex finished in %d pivots", iters)
        x = None
        if status == "optimal":
            x = np.zeros(n)
            x[keep] = xk
    else:
        raise ValueError(f"unknown LP backend {backend!r}")

    if status != "optimal":
        # x = 0 is always feasible and the objective is bounded by sum q r p
        raise RuntimeError(f"offline LP reported {status}; the instance cannot be valid")

    x = _repair(problem, np.asarray(x, dtype=float))
    return LpSolution(x=x.reshape(problem.shape), objective=float(problem.c @ x),
                      status=status, backend=backend)


def solve_instance(instance: Instance, tol: float = 1e-7, backend: str = "highs",
                   level_mask=None) -> LpSolution:
    return solve(build_off(instance, level_mask=level_mask), tol=tol, backend=backend)


def machine_contribution(instance: Instance, solution: LpSolution) -> np.ndarray:
    """Per machine ``sum_{t,l,e in E_u} q_e r_{e,l} x*_{e,l,t}``."""
    per_edge = instance.q * np.einsum("elt,el->e", solution.x, instance.rewards)
    out = np.zeros(instance.n_machines)
    np.add.at(out, instance.edge_u, per_edge)
    return out


def dump(problem: LpProblem, path) -> None:
    """Write the LP in a plain sparse text form.

    Layout::

        omla-lp <rows> <cols> max
        senses <one 'L' per row>
        rhs <b_1> ... <b_m>
        obj <c_1> ... <c_n>
        ub <u_1> ... <u_n>          ('inf' for free above)
        <row> <col> <value>         one line per nonzero, 0-based
    """
    A = problem.A.tocoo()
    fmt = lambda a: " ".join(repr(float(v)) if np.isfinite(v) else "inf" for v in a)
    lines = [f"omla-lp {problem.n_rows} {problem.n_cols} max",
             "senses " + " ".join("L" for _ in range(problem.n_rows)),
             "rhs " + fmt(problem.b),
             "obj " + fmt(problem.c),
             "ub " + fmt(problem.ub)]
    order = np.lexsort((A.col, A.row))
    lines += [f"{A.row[k]} {A.col[k]} {A.data[k]!r}" for k in order]
    Path(path).write_text("\n".join(lines) + "\n")
