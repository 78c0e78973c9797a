"""Problem instances: machines, repeatable tasks, processing levels.

Indexing conventions used across the package:

* machine, task and edge ids are 0-based and dense;
* time slots ``t`` and levels ``l`` are 1-based in every public accessor,
  while the backing numpy arrays are 0-based (``t - 1``, ``l - 1``);
* a budget is a positive ``int`` or the sentinel :data:`UNLIMITED`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

UNLIMITED = math.inf

PROB_TOL = 1e-9
SUM_TOL = 1e-12


def is_unlimited(budget) -> bool:
    return budget == UNLIMITED


class InvalidInstance(ValueError):
    """Raised when an operation receives an instance that fails :func:`validate`."""


@dataclass(frozen=True)
class DelayDist:
    """Distribution of the occupation time of one processing level.

    ``pmf[k]`` is ``Pr{d = k + 1}``; the support starts at 1 by construction.
    """

    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float).ravel()
        if pmf.size == 0:
            raise ValueError("empty delay distribution")
        object.__setattr__(self, "pmf", pmf)
        # tail[k - 1] = Pr{d >= k} for k = 1..dmax + 1
        tail = np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]])
        object.__setattr__(self, "_tail", tail)

    @classmethod
    def from_mapping(cls, pmf: dict) -> "DelayDist":
        support = {int(d): float(p) for d, p in pmf.items()}
        if not support:
            raise ValueError("empty delay distribution")
        if min(support) < 1:
            raise ValueError("delay support must start at d >= 1")
        arr = np.zeros(max(support))
        for d, p in support.items():
            arr[d - 1] += p
        return cls(arr)

    @classmethod
    def point(cls, d: int) -> "DelayDist":
        arr = np.zeros(d)
        arr[d - 1] = 1.0
        return cls(arr)

    @classmethod
    def clamped(cls, pmf_from_zero) -> "DelayDist":
        """Build from a pmf indexed from ``d = 0``, folding the zero mass into ``d = 1``."""
        p = np.asarray(pmf_from_zero, dtype=float)
        p = p / p.sum()
        if p.size < 2:
            return cls(np.array([p.sum()]))
        arr = p[1:].copy()
        arr[0] += p[0]
        return cls(arr)

    @property
    def support_max(self) -> int:
        nz = np.flatnonzero(self.pmf)
        return int(nz[-1]) + 1 if nz.size else 1

    def prob(self, d: int) -> float:
        if d < 1 or d > self.pmf.size:
            return 0.0
        return float(self.pmf[d - 1])

    def tail(self, k: int) -> float:
        """``Pr{d >= k}``."""
        if k <= 1:
            return float(self._tail[0])
        if k - 1 >= self._tail.size:
            return 0.0
        return float(self._tail[k - 1])

    def to_mapping(self) -> dict:
        return {str(d + 1): float(p) for d, p in enumerate(self.pmf) if p != 0.0}


def expected_delay(d: DelayDist) -> float:
    return float(np.dot(np.arange(1, d.pmf.size + 1), d.pmf))


@dataclass(frozen=True)
class MachineSpec:
    id: int
    budget: float | int = UNLIMITED


@dataclass(frozen=True)
class TaskSpec:
    id: int


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    q: float


@dataclass(frozen=True)
class Instance:
    """Immutable problem datum.

    ``rewards`` has shape ``(|E|, L)``, ``arrivals`` shape ``(|V|, T)``
    (task-major), ``theta`` holds the integer penalty of each level and
    ``delays`` one :class:`DelayDist` per level.
    """

    T: int
    L: int
    machines: tuple[MachineSpec, ...]
    tasks: tuple[TaskSpec, ...]
    edges: tuple[Edge, ...]
    rewards: np.ndarray
    theta: tuple[int, ...]
    arrivals: np.ndarray
    delays: tuple[DelayDist, ...]

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "theta", tuple(int(x) for x in self.theta))
        object.__setattr__(self, "delays", tuple(self.delays))
        rewards = np.array(self.rewards, dtype=float).reshape(len(self.edges), self.L)
        arrivals = np.array(self.arrivals, dtype=float).reshape(len(self.tasks), self.T)
        rewards.setflags(write=False)
        arrivals.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "arrivals", arrivals)
        if len(self.theta) != self.L or len(self.delays) != self.L:
            raise ValueError("theta and delays need one entry per level")

    # sizes -----------------------------------------------------------------
    @property
    def n_machines(self) -> int:
        return len(self.machines)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def theta_max(self) -> int:
        return max(self.theta)

    @property
    def budgets(self) -> tuple:
        return tuple(m.budget for m in self.machines)

    @property
    def delta_max(self):
        """Largest finite budget, or ``UNLIMITED`` if no machine has one."""
        finite = [b for b in self.budgets if not is_unlimited(b)]
        return max(finite) if finite else UNLIMITED

    @property
    def all_unlimited(self) -> bool:
        return all(is_unlimited(b) for b in self.budgets)

    @property
    def all_limited(self) -> bool:
        return not any(is_unlimited(b) for b in self.budgets)

    # derived arrays --------------------------------------------------------
    @cached_property
    def edge_u(self) -> np.ndarray:
        return np.array([e.u for e in self.edges], dtype=int)

    @cached_property
    def edge_v(self) -> np.ndarray:
        return np.array([e.v for e in self.edges], dtype=int)

    @cached_property
    def q(self) -> np.ndarray:
        return np.array([e.q for e in self.edges], dtype=float)

    @cached_property
    def edges_of_machine(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in self.machines]
        for e in self.edges:
            out[e.u].append(e.id)
        return tuple(tuple(x) for x in out)

    @cached_property
    def edges_of_task(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in self.tasks]
        for e in self.edges:
            out[e.v].append(e.id)
        return tuple(tuple(x) for x in out)

    @cached_property
    def edge_index(self) -> dict:
        return {(e.u, e.v): e.id for e in self.edges}

    @cached_property
    def expected_delays(self) -> np.ndarray:
        return np.array([expected_delay(d) for d in self.delays])

    def delay_pmf_matrix(self, width: int | None = None) -> np.ndarray:
        """``(L, width)`` array with ``[l-1, d-1] = Pr{d_l = d}``, zero padded or truncated."""
        width = self.T if width is None else width
        out = np.zeros((self.L, width))
        for i, d in enumerate(self.delays):
            n = min(width, d.pmf.size)
            out[i, :n] = d.pmf[:n]
        return out

    def delay_tail_matrix(self, width: int | None = None) -> np.ndarray:
        """``(L, width)`` array with ``[l-1, k-1] = Pr{d_l >= k}``."""
        width = self.T + 1 if width is None else width
        out = np.zeros((self.L, width))
        for i, d in enumerate(self.delays):
            for k in range(1, width + 1):
                out[i, k - 1] = d.tail(k)
        return out

    def replace(self, **changes) -> "Instance":
        kw = dict(T=self.T, L=self.L, machines=self.machines, tasks=self.tasks,
                  edges=self.edges, rewards=self.rewards, theta=self.theta,
                  arrivals=self.arrivals, delays=self.delays)
        kw.update(changes)
        return Instance(**kw)

    def with_budgets(self, budgets: Sequence) -> "Instance":
        ms = tuple(MachineSpec(m.id, b) for m, b in zip(self.machines, budgets))
        return self.replace(machines=ms)


def make_instance(T, L, budgets, n_tasks, edges, rewards, theta, arrivals, delays) -> Instance:
    """Convenience constructor from plain python data.

    ``edges`` is a list of ``(u, v, q)`` triples; ``rewards`` one row of ``L``
    values per edge; ``delays`` a list of :class:`DelayDist` or mappings.
    """
    machines = tuple(MachineSpec(i, b) for i, b in enumerate(budgets))
    tasks = tuple(TaskSpec(i) for i in range(n_tasks))
    es = tuple(Edge(i, int(u), int(v), float(q)) for i, (u, v, q) in enumerate(edges))
    ds = tuple(d if isinstance(d, DelayDist) else DelayDist.from_mapping(d) for d in delays)
    return Instance(T=T, L=L, machines=machines, tasks=tasks, edges=es,
                    rewards=np.asarray(rewards, dtype=float).reshape(len(es), L),
                    theta=tuple(theta), arrivals=arrivals, delays=ds)


# ---------------------------------------------------------------------------
# validation

@dataclass
class ValidationReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "pass" if self.ok else "\n".join(self.failures)


def validate(instance: Instance) -> ValidationReport:
    """Check every modelling assumption; never raises, never mutates."""
    inst = instance
    fails: list[str] = []

    if inst.T < 1:
        fails.append(f"horizon T={inst.T} must be positive")
    if inst.L < 1:
        fails.append(f"level count L={inst.L} must be positive")

    for i, m in enumerate(inst.machines):
        if m.id != i:
            fails.append(f"machine ids not dense at position {i} (id={m.id})")
        b = m.budget
        if not is_unlimited(b):
            if isinstance(b, bool) or not float(b).is_integer() or b < 1:
                fails.append(f"budget of machine {i} must be a positive integer or unlimited, got {b!r}")
    for i, v in enumerate(inst.tasks):
        if v.id != i:
            fails.append(f"task ids not dense at position {i} (id={v.id})")

    seen = set()
    for i, e in enumerate(inst.edges):
        if e.id != i:
            fails.append(f"edge ids not dense at position {i} (id={e.id})")
        if not (0 <= e.u < inst.n_machines) or not (0 <= e.v < inst.n_tasks):
            fails.append(f"edge {i} references unknown endpoint ({e.u}, {e.v})")
        if (e.u, e.v) in seen:
            fails.append(f"duplicate edge ({e.u}, {e.v}) at edge {i}")
        seen.add((e.u, e.v))
        if not (-PROB_TOL <= e.q <= 1 + PROB_TOL) or not math.isfinite(e.q):
            fails.append(f"acceptance probability of edge {i} outside [0,1]: {e.q}")

    r = inst.rewards
    if not np.all(np.isfinite(r)):
        fails.append("rewards contain non-finite entries")
    if np.any(r < 0):
        e, l = np.argwhere(r < 0)[0]
        fails.append(f"negative reward at edge {e}, level {l + 1}")
    if inst.L > 1:
        bad = np.argwhere(np.diff(r, axis=1) <= 0)
        for e, l in bad[:5]:
            fails.append(f"rewards not increasing in level at edge {e}, levels {l + 1}->{l + 2}")

    for l, th in enumerate(inst.theta, start=1):
        if th < 1:
            fails.append(f"penalty theta_{l}={th} must be an integer >= 1")

    p = inst.arrivals
    if not np.all(np.isfinite(p)):
        fails.append("arrival probabilities contain non-finite entries")
    if np.any(p < -PROB_TOL) or np.any(p > 1 + PROB_TOL):
        v, t = np.argwhere((p < -PROB_TOL) | (p > 1 + PROB_TOL))[0]
        fails.append(f"arrival probability p[{v},{t + 1}] outside [0,1]")
    mass = p.sum(axis=0)
    for t in np.flatnonzero(mass > 1 + PROB_TOL)[:5]:
        fails.append(f"arrival mass exceeds 1 at t={t + 1} ({mass[t]:.6g})")

    for l, d in enumerate(inst.delays, start=1):
        if np.any(d.pmf < -PROB_TOL):
            fails.append(f"delay pmf of level {l} has negative mass")
        if abs(d.pmf.sum() - 1.0) > SUM_TOL:
            fails.append(f"delay pmf of level {l} sums to {d.pmf.sum():.15g}")
    if inst.L > 1:
        ed = inst.expected_delays
        for l in np.flatnonzero(np.diff(ed) <= 0):
            fails.append(f"expected delay not increasing in level at levels {l + 1}->{l + 2}")

    return ValidationReport(fails)


def require_valid(instance: Instance) -> None:
    report = validate(instance)
    if not report.ok:
        raise InvalidInstance(str(report))


# ---------------------------------------------------------------------------
# JSON format

_KEYS = {"T", "L", "machines", "tasks", "edges", "rewards", "theta", "arrivals", "delays"}


def to_dict(instance: Instance) -> dict:
    inst = instance
    return {
        "T": inst.T,
        "L": inst.L,
        "machines": [{"id": m.id, "budget": "inf" if is_unlimited(m.budget) else int(m.budget)}
                     for m in inst.machines],
        "tasks": [{"id": v.id} for v in inst.tasks],
        "edges": [{"id": e.id, "u": e.u, "v": e.v, "q": e.q} for e in inst.edges],
        "rewards": {str(e.id): {str(l + 1): float(inst.rewards[e.id, l]) for l in range(inst.L)}
                    for e in inst.edges},
        "theta": list(inst.theta),
        "arrivals": inst.arrivals.tolist(),
        "delays": [{"pmf": d.to_mapping()} for d in inst.delays],
    }


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ValueError(f"unknown keys in {where}: {sorted(extra)}")
    missing = allowed - set(obj)
    if missing:
        raise ValueError(f"missing keys in {where}: {sorted(missing)}")


def from_dict(data: dict) -> Instance:
    _check_keys(data, _KEYS, "instance")
    T, L = int(data["T"]), int(data["L"])
    machines = []
    for m in data["machines"]:
        _check_keys(m, {"id", "budget"}, "machine")
        b = m["budget"]
        machines.append(MachineSpec(int(m["id"]), UNLIMITED if b == "inf" else int(b)))
    tasks = []
    for v in data["tasks"]:
        _check_keys(v, {"id"}, "task")
        tasks.append(TaskSpec(int(v["id"])))
    edges = []
    for e in data["edges"]:
        _check_keys(e, {"id", "u", "v", "q"}, "edge")
        edges.append(Edge(int(e["id"]), int(e["u"]), int(e["v"]), float(e["q"])))
    rewards = np.full((len(edges), L), np.nan)
    for eid, row in data["rewards"].items():
        for lvl, val in row.items():
            rewards[int(eid), int(lvl) - 1] = float(val)
    if np.isnan(rewards).any():
        raise ValueError("rewards missing for some (edge, level) pairs")
    delays = []
    for d in data["delays"]:
        _check_keys(d, {"pmf"}, "delay")
        delays.append(DelayDist.from_mapping(d["pmf"]))
    return Instance(T=T, L=L, machines=tuple(machines), tasks=tuple(tasks), edges=tuple(edges),
                    rewards=rewards, theta=tuple(int(x) for x in data["theta"]),
                    arrivals=np.asarray(data["arrivals"], dtype=float), delays=tuple(delays))


def dumps(instance: Instance) -> str:
    return json.dumps(to_dict(instance), sort_keys=True)


def save(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(to_dict(instance), indent=1, sort_keys=True) + "\n")


def load(path) -> Instance:
    return from_dict(json.loads(Path(path).read_text()))
