import numpy as np
import pytest

from omla import gen, model, oracle
from omla.model import UNLIMITED, validate
from omla.policies import make_policy, prepare


def test_default_protocol_edge_count():
    counts = [gen.synthetic(gen.SyntheticConfig(T=5, seed=s)).n_edges for s in range(1000)]
    # mean 25, per-seed sd ~4.7, so the 1000-seed mean is within ~0.45 at 3 sigma
    assert abs(np.mean(counts) - 25.0) < 0.5


def test_defaults_match_protocol():
    inst = gen.synthetic(gen.SyntheticConfig(seed=0))
    assert (inst.n_machines, inst.n_tasks, inst.T) == (10, 25, 100)
    assert inst.theta == (3, 4)
    assert inst.all_unlimited
    q = inst.q
    assert np.all((q >= 0.5) & (q <= 1.0))


def test_single_level_is_valid():
    for s in range(20):
        assert validate(gen.synthetic(gen.SyntheticConfig(L=1, T=20, seed=s))).ok


def test_fixed_seed_is_reproducible():
    a = gen.synthetic(gen.SyntheticConfig(delta=5, seed=12))
    b = gen.synthetic(gen.SyntheticConfig(delta=5, seed=12))
    assert model.dumps(a) == model.dumps(b)
    assert model.dumps(gen.tiny(3)) == model.dumps(gen.tiny(3))


def test_budgets_in_range():
    inst = gen.synthetic(gen.SyntheticConfig(delta=4, seed=1))
    assert all(1 <= b <= 4 for b in inst.budgets)


def test_binomial_level_too_large():
    with pytest.raises(ValueError):
        gen.binomial_delay(100, 13)


def test_bad_config():
    with pytest.raises(ValueError):
        gen.SyntheticConfig(edge_prob=1.5)
    with pytest.raises(ValueError):
        gen.hardness(0.0)


def test_tiny_respects_oracle_limits():
    for s in range(50):
        oracle.check_limits(gen.tiny(s))


@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_hardness_instance(eps):
    inst = gen.hardness(eps)
    assert oracle.exact_opt(inst).value == pytest.approx(2 - eps, abs=1e-9)
    art = prepare(inst)
    for name in ("omla", "random", "ug", "eg", "ug+", "eg+"):
        assert oracle.exact_policy_value(inst, make_policy(name, art)).value <= 1 + 1e-9
    assert 1.0 / (2 - eps) == pytest.approx({0.5: 1 / 1.5, 0.1: 1 / 1.9}[eps])
