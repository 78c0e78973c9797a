"""Discrete-time Monte Carlo simulation of the assignment process."""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import Instance
from .policies import DISCARD, Assign, ContractViolation, Policy, SimState

PURPOSES = ("arrival", "accept", "delay", "policy")


class RandomStream:
    """Counter-based uniforms addressed by ``(episode, purpose, t)``.

    Episode ``i`` owns the Philox counter block ``[*, i, 0, 0]`` under a key
    derived from the seed, so any episode can be regenerated in isolation
    and the draws do not depend on how episodes are scheduled.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._key = np.random.SeedSequence(self.seed).generate_state(2, np.uint64)
        self._bg = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bg)
        self._fresh = self._bg.state        # empty output buffer, counter zero

    def episode(self, index: int, T: int) -> np.ndarray:
        """``(len(PURPOSES), T)`` block; row order follows :data:`PURPOSES`."""
        # resetting the state is equivalent to Philox(key, counter=[0, index, 0, 0]) but cheaper
        st = self._fresh
        st["state"]["counter"] = np.array([0, index, 0, 0], dtype=np.uint64)
        self._bg.state = st
        return self._gen.random((len(PURPOSES), T))

    def __getstate__(self):
        return {"seed": self.seed}

    def __setstate__(self, state):
        self.__init__(state["seed"])


@dataclass
class EpisodeTrace:
    events: list
    reward: float
    budgets: list

    def to_jsonl(self) -> str:
        return "".join(json.dumps(ev) + "\n" for ev in self.events)


@dataclass
class SimSummary:
    policy: str
    n: int
    seed: int
    mean: float
    variance: float
    stderr: float
    rewards: np.ndarray = field(default=None, repr=False)

    def csv_row(self, instance_id: str) -> str:
        return f"{instance_id},{self.policy},{self.n},{self.seed},{self.mean!r},{self.stderr!r}"


class _Env:
    """Per-instance lookup tables for fast stepping."""

    def __init__(self, instance: Instance):
        inst = instance
        self.T = inst.T
        self.n_tasks = inst.n_tasks
        self.arrival_cum = [np.cumsum(inst.arrivals[:, t]).tolist() for t in range(inst.T)]
        self.delay_cum = [np.cumsum(d.pmf).tolist() for d in inst.delays]
        self.edge_u = inst.edge_u.tolist()
        self.edge_v = inst.edge_v.tolist()
        self.q = inst.q.tolist()
        self.rewards = inst.rewards.tolist()
        self.theta = list(inst.theta)
        self.budgets = list(inst.budgets)
        self.n_machines = inst.n_machines


def _sample_delay(cum, u01) -> int:
    return min(bisect_right(cum, u01), len(cum) - 1) + 1


def _episode(env: _Env, policy: Policy, draws: np.ndarray, record: bool):
    T = env.T
    arr, acc, dly, pol = (draws[i].tolist() for i in range(4))
    state = SimState(t=1, occupied_until=[0] * env.n_machines, budget=list(env.budgets))
    events = [] if record else None
    reward = 0.0
    for t in range(1, T + 1):
        state.t = t
        cum = env.arrival_cum[t - 1]
        v = bisect_right(cum, arr[t - 1])
        if v >= env.n_tasks:
            if record:
                events.append({"event": "no_arrival", "t": t})
            continue
        if record:
            events.append({"event": "arrival", "t": t, "v": v})
        dec = policy.decide(state, v, pol[t - 1])
        if dec is DISCARD:
            if record:
                events.append({"event": "discarded", "t": t})
            continue
        if not isinstance(dec, Assign):
            raise ContractViolation(f"policy {policy.name} returned {dec!r}")
        u, l, e = dec
        if env.edge_u[e] != u or env.edge_v[e] != v or not 1 <= l <= len(env.theta):
            raise ContractViolation(f"policy {policy.name} assigned non-adjacent pair {dec} for task {v}")
        if state.occupied_until[u] > t or state.budget[u] <= 0:
            raise ContractViolation(f"policy {policy.name} assigned busy or removed machine {u} at t={t}")
        if record:
            events.append({"event": "assigned", "t": t, "u": u, "v": v, "l": l})
        if acc[t - 1] < env.q[e]:
            reward += env.rewards[e][l - 1]
            d = _sample_delay(env.delay_cum[l - 1], dly[t - 1])
            state.occupied_until[u] = t + d
            if record:
                events.append({"event": "accepted", "t": t, "u": u, "d": d,
                               "reward": env.rewards[e][l - 1]})
        else:
            th = env.theta[l - 1]
            state.budget[u] -= th
            if record:
                events.append({"event": "rejected", "t": t, "u": u, "theta": th})
            if state.budget[u] <= 0 and record:
                events.append({"event": "removed", "t": t, "u": u})
    return reward, events, state.budget


def run_episode(instance: Instance, policy: Policy, stream: RandomStream, episode: int = 0,
                record: bool = True) -> EpisodeTrace:
    env = _Env(instance)
    reward, events, budgets = _episode(env, policy, stream.episode(episode, instance.T), record)
    return EpisodeTrace(events=events or [], reward=reward, budgets=budgets)


def _run_chunk(args):
    instance, policy, seed, start, stop = args
    env = _Env(instance)
    stream = RandomStream(seed)
    out = np.empty(stop - start)
    for k, i in enumerate(range(start, stop)):
        out[k] = _episode(env, policy, stream.episode(i, instance.T), False)[0]
    return out


def episode_rewards(instance: Instance, policy: Policy, n: int, seed: int, jobs: int = 1) -> np.ndarray:
    """Rewards of episodes ``0..n-1`` in episode order, independent of ``jobs``."""
    if n < 1:
        raise ValueError("need at least one episode")
    if jobs <= 1 or n < 2 * jobs:
        return _run_chunk((instance, policy, seed, 0, n))
    bounds = np.linspace(0, n, jobs + 1).astype(int)
    chunks = [(instance, policy, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return np.concatenate(parts)


def summarize(rewards: np.ndarray, policy: str, seed: int) -> SimSummary:
    n = rewards.size
    mean = float(rewards.mean())
    var = float(rewards.var(ddof=1)) if n > 1 else 0.0
    return SimSummary(policy=policy, n=n, seed=seed, mean=mean, variance=var,
                      stderr=math.sqrt(var / n), rewards=rewards)


def monte_carlo(instance: Instance, policy: Policy, n: int, seed: int, jobs: int = 1) -> SimSummary:
    return summarize(episode_rewards(instance, policy, n, seed, jobs), policy.name, seed)
