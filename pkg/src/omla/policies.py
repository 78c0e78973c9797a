"""Online decision rules: OMLA and the five benchmarks.

Every policy exposes its randomisation explicitly. ``distribution`` lists
the possible decisions with their probabilities (used by the exact
evaluator) and ``decide`` maps one uniform draw onto that same list by
inverse CDF (used by the simulator), so both views always agree.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .lp import LpSolution, solve_instance
from .model import Instance, is_unlimited
from .tables import build_tables

POLICY_NAMES = ("omla", "random", "ug", "eg", "ug+", "eg+")


class Assign(NamedTuple):
    u: int
    l: int
    e: int


class _Discard:
    __slots__ = ()

    def __repr__(self):
        return "Discard"

    def __reduce__(self):
        return "DISCARD"


DISCARD = _Discard()


class ContractViolation(RuntimeError):
    """A policy or sampler broke the simulator's contract."""


@dataclass
class SimState:
    """Mutable per-episode state.

    A machine is available at ``t`` iff ``t >= occupied_until[u]``; it is alive
    iff its remaining budget is positive (unlimited budgets stay ``inf``).
    """

    t: int
    occupied_until: list
    budget: list

    @classmethod
    def initial(cls, instance: Instance) -> "SimState":
        return cls(t=1, occupied_until=[0] * instance.n_machines, budget=list(instance.budgets))

    def alive(self, u) -> bool:
        return self.budget[u] > 0

    def available(self, u) -> bool:
        return self.t >= self.occupied_until[u]

    def free(self, u) -> bool:
        return self.budget[u] > 0 and self.t >= self.occupied_until[u]

    def copy(self) -> "SimState":
        return SimState(self.t, list(self.occupied_until), list(self.budget))


class Policy:
    name = "policy"

    def distribution(self, state: SimState, v: int) -> list:
        raise NotImplementedError

    def decide(self, state: SimState, v: int, u01: float):
        acc = 0.0
        dist = self.distribution(state, v)
        for p, dec in dist:
            acc += p
            if u01 < acc:
                return dec
        return dist[-1][1] if dist else DISCARD


class OmlaPolicy(Policy):
    """Sample an edge-level pair from ``x*/p`` and gate on ``Q >= R_{t+1}``."""

    name = "omla"

    def __init__(self, instance: Instance, solution: LpSolution, tables, name="omla"):
        self.name = name
        self.instance = instance
        self.tables = tables
        inst = instance
        L, T = inst.L, inst.T
        # candidates[v][t-1] = (cumulative probs, [(e, l), ...])
        self._cands = []
        for v in range(inst.n_tasks):
            per_t = []
            for t in range(1, T + 1):
                p = float(inst.arrivals[v, t - 1])
                cum, pairs, acc = [], [], 0.0
                if p > 0:
                    for e in inst.edges_of_task[v]:
                        for l in range(1, L + 1):
                            xv = float(solution.x[e, l - 1, t - 1])
                            if xv > 0:
                                acc += xv / p
                                cum.append(acc)
                                pairs.append((e, l))
                per_t.append((p, cum, pairs))
            self._cands.append(per_t)
        self._edge_u = inst.edge_u.tolist()

    def _gate(self, state: SimState, e: int, l: int):
        u = self._edge_u[e]
        if not state.free(u):
            return DISCARD
        delta, t = state.budget[u], state.t
        if self.tables.Q_at(e, l, delta, t) >= self.tables.R_at(u, delta, t + 1):
            return Assign(u, l, e)
        return DISCARD

    def _candidates(self, state, v):
        p, cum, pairs = self._cands[v][state.t - 1]
        if p <= 0:
            raise ContractViolation(f"task {v} arrived at t={state.t} where p_(v,t) = 0")
        return cum, pairs

    def distribution(self, state, v):
        cum, pairs = self._candidates(state, v)
        out, prev = [], 0.0
        for c, (e, l) in zip(cum, pairs):
            out.append((c - prev, self._gate(state, e, l)))
            prev = c
        if prev < 1.0:
            out.append((1.0 - prev, DISCARD))
        return out

    def decide(self, state, v, u01):
        cum, pairs = self._candidates(state, v)
        k = bisect_right(cum, u01)
        if k >= len(pairs):
            return DISCARD
        return self._gate(state, *pairs[k])


class RandomPolicy(Policy):
    """Uniform machine-level pair; an unavailable draw discards."""

    name = "random"

    def __init__(self, instance: Instance):
        self.instance = instance
        L = instance.L
        self._pairs = [[(instance.edges[e].u, l, e) for e in instance.edges_of_task[v]
                        for l in range(1, L + 1)] for v in range(instance.n_tasks)]

    def distribution(self, state, v):
        pairs = self._pairs[v]
        if not pairs:
            return [(1.0, DISCARD)]
        w = 1.0 / len(pairs)
        return [(w, Assign(*pr) if state.free(pr[0]) else DISCARD) for pr in pairs]

    def decide(self, state, v, u01):
        pairs = self._pairs[v]
        if not pairs:
            return DISCARD
        pr = pairs[min(int(u01 * len(pairs)), len(pairs) - 1)]
        return Assign(*pr) if state.free(pr[0]) else DISCARD


class GreedyPolicy(Policy):
    """Best free pair by a fixed score; ties to the lowest machine, then level."""

    def __init__(self, instance: Instance, efficiency: bool, name: str):
        self.name = name
        self.instance = instance
        score = instance.rewards.copy()
        if efficiency:
            score = score / instance.expected_delays[None, :]
        ranked = []
        for v in range(instance.n_tasks):
            pairs = [(instance.edges[e].u, l, e) for e in instance.edges_of_task[v]
                     for l in range(1, instance.L + 1)]
            pairs.sort(key=lambda pr: (-score[pr[2], pr[1] - 1], pr[0], pr[1]))
            ranked.append(pairs)
        self._ranked = ranked

    def decide(self, state, v, u01=0.0):
        for pr in self._ranked[v]:
            if state.free(pr[0]):
                return Assign(*pr)
        return DISCARD

    def distribution(self, state, v):
        return [(1.0, self.decide(state, v))]


def collapsed_level_mask(instance: Instance, efficiency: bool) -> np.ndarray:
    """One allowed level per edge: argmax of ``r`` (or ``r / E[d]``), lowest level on ties."""
    score = instance.rewards / instance.expected_delays[None, :] if efficiency else instance.rewards
    mask = np.zeros(score.shape, dtype=bool)
    if score.size:
        mask[np.arange(score.shape[0]), np.argmax(score, axis=1)] = True
    return mask


@dataclass
class Artifacts:
    """Precomputed inputs shared read-only by all policies of one instance."""

    instance: Instance
    solution: LpSolution
    tables: object
    collapsed: dict = field(default_factory=dict)   # "ug+"/"eg+" -> (solution, tables)


def prepare(instance: Instance, policies=POLICY_NAMES, backend="highs", tol=1e-7,
            solution: LpSolution | None = None) -> Artifacts:
    if solution is None:
        solution = solve_instance(instance, tol=tol, backend=backend)
    art = Artifacts(instance, solution, build_tables(instance, solution))
    for name, eff in (("ug+", False), ("eg+", True)):
        if name in policies:
            mask = collapsed_level_mask(instance, eff)
            sol = solve_instance(instance, tol=tol, backend=backend, level_mask=mask)
            art.collapsed[name] = (sol, build_tables(instance, sol))
    return art


def make_policy(name: str, artifacts: Artifacts) -> Policy:
    inst = artifacts.instance
    if name == "omla":
        return OmlaPolicy(inst, artifacts.solution, artifacts.tables)
    if name == "random":
        return RandomPolicy(inst)
    if name == "ug":
        return GreedyPolicy(inst, efficiency=False, name="ug")
    if name == "eg":
        return GreedyPolicy(inst, efficiency=True, name="eg")
    if name in ("ug+", "eg+"):
        if name not in artifacts.collapsed:
            raise ValueError(f"artifacts were prepared without {name!r}")
        sol, tab = artifacts.collapsed[name]
        return OmlaPolicy(inst, sol, tab, name=name)
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")


def omla_decide(state: SimState, v: int, tables, solution: LpSolution, u01: float,
                instance: Instance):
    """One-shot OMLA decision (builds the candidate index each call)."""
    return OmlaPolicy(instance, solution, tables).decide(state, v, u01)


def benchmark_decide(name: str, state: SimState, v: int, artifacts: Artifacts, u01: float):
    if name not in POLICY_NAMES or name == "omla":
        raise ValueError(f"unknown benchmark {name!r}")
    return make_policy(name, artifacts).decide(state, v, u01)
