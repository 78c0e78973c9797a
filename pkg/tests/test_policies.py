import pickle

import numpy as np
import pytest
from scipy.stats import chisquare

from omla import gen, lp, tables
from omla.model import DelayDist, make_instance
from omla.policies import (DISCARD, POLICY_NAMES, Assign, ContractViolation, GreedyPolicy, OmlaPolicy,
                           SimState, collapsed_level_mask, make_policy, prepare)

from helpers import HAND_X, given_solution, hand_instance, single_slot

BENCHMARKS = ("random", "ug", "eg", "ug+", "eg+")


def omla_for(inst, sol=None):
    sol = sol or lp.solve_instance(inst)
    return OmlaPolicy(inst, sol, tables.build_tables(inst, sol)), sol


def test_zero_mass_discards_with_certainty():
    inst = hand_instance()
    sol = given_solution(np.zeros((1, 1, 2)))
    pol = OmlaPolicy(inst, sol, tables.build_tables(inst, sol))
    state = SimState.initial(inst)
    assert pol.distribution(state, 0) == [(1.0, DISCARD)]
    assert all(pol.decide(state, 0, u) is DISCARD for u in np.linspace(0, 0.999, 25))


def test_single_slot_full_mass_assigns():
    inst = single_slot(q=0.5, r=4.0)
    pol, sol = omla_for(inst)
    assert sol.x[0, 0, 0] == pytest.approx(1.0)
    assert pol.decide(SimState.initial(inst), 0, 0.3) == Assign(0, 1, 0)


def test_assign_frequency_on_hand_instance():
    inst = hand_instance()
    sol = given_solution(HAND_X)
    pol = OmlaPolicy(inst, sol, tables.build_tables(inst, sol))
    state = SimState.initial(inst)
    n = 100_000
    u01 = np.random.default_rng(5).random(n)
    hits = sum(pol.decide(state, 0, u) is not DISCARD for u in u01)
    sigma = np.sqrt(n * 0.25)
    assert abs(hits - 0.5 * n) <= 3 * sigma


def test_pair_frequencies_follow_lp_ratios():
    # at T=1 the baseline after the horizon is 0, so the gate never discards and
    # the decision frequencies are exactly the sampling distribution x/p
    inst = make_instance(T=1, L=2, budgets=[2, 2, 2], n_tasks=1,
                         edges=[(0, 0, 0.6), (1, 0, 0.7), (2, 0, 0.9)],
                         rewards=[[1.0, 2.0], [1.5, 2.5], [0.5, 3.0]], theta=[1, 2],
                         arrivals=[[0.8]], delays=[DelayDist.point(1), DelayDist.point(2)])
    x = np.array([[[0.05], [0.15]], [[0.2], [0.0]], [[0.1], [0.18]]])
    sol = given_solution(x)
    pol = OmlaPolicy(inst, sol, tables.build_tables(inst, sol))
    state = SimState.initial(inst)
    labels = [(e, l) for e in range(3) for l in (1, 2) if x[e, l - 1, 0] > 0] + [None]
    probs = np.array([x[e, l - 1, 0] / 0.8 for e, l in labels[:-1]] + [1 - x.sum() / 0.8])
    n = 60_000
    counts = dict.fromkeys(labels, 0)
    for u in np.random.default_rng(9).random(n):
        dec = pol.decide(state, 0, u)
        counts[None if dec is DISCARD else (dec.e, dec.l)] += 1
    observed = np.array([counts[k] for k in labels])
    assert chisquare(observed, probs * n).pvalue > 1e-3


def test_gate_compares_activation_with_baseline():
    inst = hand_instance()
    sol = given_solution(HAND_X)
    tb = tables.build_tables(inst, sol)
    pol = OmlaPolicy(inst, sol, tb)
    state = SimState.initial(inst)
    # Q = 2.5 >= R_{t+1} = 1 at t=1 with full budget
    assert pol.decide(state, 0, 0.1) == Assign(0, 1, 0)
    state.occupied_until[0] = 2
    assert pol.decide(state, 0, 0.1) is DISCARD


def test_arrival_with_zero_probability_is_a_contract_violation():
    inst = make_instance(T=2, L=1, budgets=[1], n_tasks=1, edges=[(0, 0, 0.5)], rewards=[[1.0]],
                         theta=[1], arrivals=[[0.0, 1.0]], delays=[DelayDist.point(1)])
    pol, _ = omla_for(inst)
    with pytest.raises(ContractViolation):
        pol.decide(SimState.initial(inst), 0, 0.5)


def test_single_available_pair_is_assigned_by_every_benchmark():
    inst = single_slot(q=0.5, r=4.0)
    art = prepare(inst)
    state = SimState.initial(inst)
    for name in BENCHMARKS:
        assert make_policy(name, art).decide(state, 0, 0.42) == Assign(0, 1, 0), name


def test_greedy_level_choice():
    inst = make_instance(T=12, L=2, budgets=[3], n_tasks=1, edges=[(0, 0, 0.8)], rewards=[[1.0, 2.0]],
                         theta=[1, 1], arrivals=[[0.5] * 12], delays=[DelayDist.point(1), DelayDist.point(10)])
    state = SimState.initial(inst)
    assert GreedyPolicy(inst, efficiency=False, name="ug").decide(state, 0).l == 2
    assert GreedyPolicy(inst, efficiency=True, name="eg").decide(state, 0).l == 1
    assert collapsed_level_mask(inst, False).tolist() == [[False, True]]
    assert collapsed_level_mask(inst, True).tolist() == [[True, False]]


def test_no_free_machine_means_discard_everywhere():
    inst = gen.synthetic(gen.SyntheticConfig(n_machines=3, n_tasks=4, T=6, L=2, edge_prob=0.8, delta=2, seed=1))
    art = prepare(inst)
    state = SimState.initial(inst)
    state.occupied_until = [inst.T + 5] * inst.n_machines
    for name in POLICY_NAMES:
        pol = make_policy(name, art)
        for v in range(inst.n_tasks):
            if inst.arrivals[v, 0] > 0:
                assert pol.decide(state, v, 0.3) is DISCARD
    state = SimState.initial(inst)
    state.budget = [0] * inst.n_machines
    for name in POLICY_NAMES:
        assert make_policy(name, art).decide(state, 0, 0.3) is DISCARD


def test_reward_scaling_leaves_decisions_unchanged():
    inst = gen.synthetic(gen.SyntheticConfig(n_machines=3, n_tasks=4, T=8, L=2, edge_prob=0.7, delta=3, seed=4))
    sol = lp.solve_instance(inst)
    scaled = inst.replace(rewards=inst.rewards * 4.0)
    a = OmlaPolicy(inst, sol, tables.build_tables(inst, sol))
    b = OmlaPolicy(scaled, sol, tables.build_tables(scaled, sol))
    assert np.array_equal(tables.build_tables(scaled, sol).R, 4.0 * tables.build_tables(inst, sol).R)
    rng = np.random.default_rng(0)
    for _ in range(300):
        st = SimState(t=int(rng.integers(1, inst.T + 1)),
                      occupied_until=rng.integers(0, 4, inst.n_machines).tolist(),
                      budget=rng.integers(0, 4, inst.n_machines).tolist())
        v = int(rng.integers(inst.n_tasks))
        if inst.arrivals[v, st.t - 1] == 0:
            continue
        u = float(rng.random())
        assert a.decide(st, v, u) == b.decide(st, v, u)


def test_discard_survives_pickling():
    assert pickle.loads(pickle.dumps(DISCARD)) is DISCARD


def test_unknown_policy_name():
    with pytest.raises(ValueError):
        make_policy("nope", prepare(single_slot(), policies=("omla",)))
