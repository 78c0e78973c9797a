"""Instance generators: the synthetic protocol, tiny random instances, and
the two-slot hardness example."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .model import UNLIMITED, DelayDist, Instance, is_unlimited, make_instance, validate

log = logging.getLogger(__name__)

MAX_REDRAWS = 100


@dataclass(frozen=True)
class SyntheticConfig:
    n_machines: int = 10
    n_tasks: int = 25
    T: int = 100
    L: int = 2
    edge_prob: float = 0.1
    delta: float | int = UNLIMITED     # budgets drawn uniformly from {1..delta}
    seed: int = 0
    arrival_mass: tuple = (0.3, 1.0)    # per-slot total arrival mass ~ U(lo, hi)

    def __post_init__(self):
        if min(self.n_machines, self.n_tasks, self.T, self.L) < 1:
            raise ValueError("sizes must be positive")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge probability must lie in [0, 1]")
        if not is_unlimited(self.delta) and self.delta < 1:
            raise ValueError("budget cap must be positive")
        lo, hi = self.arrival_mass
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("arrival mass range must satisfy 0 <= lo <= hi <= 1")


def binomial_delay(T: int, l: int) -> DelayDist:
    p = l ** 1.2 / 20
    if p > 1:
        raise ValueError(f"level {l} gives binomial success probability {p:.3f} > 1")
    return DelayDist.clamped(binom.pmf(np.arange(T + 1), T, p))


def _level_rewards(rng, L: int, stats: dict) -> np.ndarray:
    a = rng.uniform(0.5, 1.0)
    lv = np.arange(1, L + 1)
    lo, hi = a * lv ** 0.2, a * lv ** 0.4
    for _ in range(MAX_REDRAWS):
        r = rng.uniform(lo, hi)
        if L == 1 or np.all(np.diff(r) > 0):
            return r
        stats["redraws"] += 1
    stats["sorted"] += 1
    return np.sort(r)


def synthetic(config: SyntheticConfig) -> Instance:
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    U, V, T, L = cfg.n_machines, cfg.n_tasks, cfg.T, cfg.L

    adj = rng.random((U, V)) < cfg.edge_prob
    pairs = [(u, v) for u in range(U) for v in range(V) if adj[u, v]]
    q = rng.uniform(0.5, 1.0, size=len(pairs))
    stats = {"redraws": 0, "sorted": 0}
    rewards = np.array([_level_rewards(rng, L, stats) for _ in pairs]).reshape(len(pairs), L)
    if stats["redraws"] or stats["sorted"]:
        log.info("reward monotonicity: %d redraws, %d sorted fallbacks", stats["redraws"], stats["sorted"])

    if is_unlimited(cfg.delta):
        budgets = [UNLIMITED] * U
    else:
        budgets = [int(b) for b in rng.integers(1, int(cfg.delta) + 1, size=U)]

    raw = rng.uniform(0.0, 1.0, size=(V, T))
    mass = rng.uniform(*cfg.arrival_mass, size=T)
    arrivals = raw / raw.sum(axis=0, keepdims=True) * mass[None, :]

    inst = make_instance(
        T=T, L=L, budgets=budgets, n_tasks=V,
        edges=[(u, v, qe) for (u, v), qe in zip(pairs, q)],
        rewards=rewards, theta=[l + 2 for l in range(1, L + 1)],
        arrivals=arrivals, delays=[binomial_delay(T, l) for l in range(1, L + 1)],
    )
    report = validate(inst)
    if not report.ok:
        raise RuntimeError(f"generator produced an invalid instance: {report}")
    return inst


def tiny(seed: int, n_machines=2, n_tasks=3, T=4, L=2, delta=2, support=3,
         unlimited=False, edge_prob=0.7) -> Instance:
    """Small random instance for the exact oracles.

    Delay pmfs live on ``1..support`` with expected delay increasing in level;
    penalties are random in ``{1, 2}``.
    """
    rng = np.random.default_rng(seed)
    U = int(rng.integers(1, n_machines + 1))
    V = int(rng.integers(1, n_tasks + 1))
    pairs = [(u, v) for u in range(U) for v in range(V) if rng.random() < edge_prob]
    if not pairs:
        pairs = [(0, 0)]
    q = rng.uniform(0.2, 1.0, size=len(pairs))
    base = rng.uniform(0.5, 2.0, size=(len(pairs), 1))
    steps = rng.uniform(0.1, 1.0, size=(len(pairs), L))
    rewards = base + np.cumsum(steps, axis=1) - steps[:, :1]
    raw = rng.uniform(0, 1, size=(V, T))
    arrivals = raw / raw.sum(axis=0, keepdims=True) * rng.uniform(0.4, 1.0, size=T)
    delays = []
    prev = 0.0
    for _ in range(L):
        for _attempt in range(1000):
            pmf = rng.dirichlet(np.ones(support))
            if np.dot(np.arange(1, support + 1), pmf) > prev + 1e-6:
                break
        else:
            pmf = np.zeros(support)
            pmf[-1] = 1.0
        pmf = pmf / pmf.sum()
        prev = float(np.dot(np.arange(1, support + 1), pmf))
        delays.append(DelayDist(pmf))
    if unlimited:
        budgets = [UNLIMITED] * U
    else:
        budgets = [int(b) for b in rng.integers(1, delta + 1, size=U)]
    theta = [int(x) for x in rng.integers(1, 3, size=L)]
    inst = make_instance(T=T, L=L, budgets=budgets, n_tasks=V,
                         edges=[(u, v, qe) for (u, v), qe in zip(pairs, q)],
                         rewards=rewards, theta=theta, arrivals=arrivals, delays=delays)
    report = validate(inst)
    if not report.ok:
        raise RuntimeError(f"tiny generator produced an invalid instance: {report}")
    return inst


def hardness(eps: float) -> Instance:
    """One machine, tasks ``x, y, z`` (ids 0, 1, 2), two slots, occupation for the whole horizon."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return make_instance(
        T=2, L=1, budgets=[UNLIMITED], n_tasks=3,
        edges=[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)],
        rewards=[[1.0], [1.0 / eps], [0.0]],
        theta=[1],
        arrivals=[[1.0, 0.0], [0.0, eps], [0.0, 1.0 - eps]],
        delays=[DelayDist.point(2)],
    )
