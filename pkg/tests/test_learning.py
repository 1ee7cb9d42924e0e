"""Regret-learning tests: action sets, costs, mixing, and updates."""

import numpy as np
import pytest

from scnsim.learning import (
    ClusterLearner,
    CostParams,
    bg_distribution,
    build_action_set,
    cluster_cost,
    penalty_cost,
)


def test_action_set_shapes_and_order():
    actions = build_action_set([[6.3]])
    assert len(actions) == 2
    assert actions[0].powers == (6.3,) and actions[0].states == (1,)
    assert actions[1].powers == (0.0,) and actions[1].states == (0,)

    actions = build_action_set([[1.0, 2.0]])
    assert [a.states for a in actions] == [(1,), (1,), (0,)]

    actions = build_action_set([[1.0], [2.0]])
    assert len(actions) == 4
    assert actions[0].states == (1, 1)  # all-on first
    assert actions[-1].states == (0, 0)  # all-off last

    actions = build_action_set([[1.0, 2.0]] * 3)
    assert len(actions) == 27


def test_action_set_cap():
    # 2^10 joint actions sits exactly at the default cap
    assert len(build_action_set([[1.0]] * 10)) == 1024
    with pytest.raises(ValueError):
        build_action_set([[1.0]] * 11)
    with pytest.raises(ValueError):
        build_action_set([[1.0], []])


def test_cost_values():
    params = CostParams(alpha=0.5, beta=0.5)
    assert cluster_cost(np.array([1.0, 2.0]), np.array([0.3, 0.7]),
                        params) == pytest.approx(2.0)
    assert penalty_cost([6.3, 6.3], params) == pytest.approx(7.3)
    skewed = CostParams(alpha=1.0, beta=0.0)
    assert cluster_cost(np.array([1.0, 2.0]), np.array([0.3, 0.7]),
                        skewed) == pytest.approx(3.0)


def test_bg_distribution():
    # nonpositive regrets all collapse to the uniform mix
    assert np.allclose(bg_distribution(np.zeros(4), 10.0), 0.25)
    assert np.allclose(bg_distribution(np.array([-5.0, -1.0]), 10.0), 0.5)
    # two actions, kappa * gap = 1 gives the logistic split e/(1+e)
    pi = bg_distribution(np.array([0.0, 0.1]), 10.0)
    assert pi[0] == pytest.approx(0.2689414213699951, rel=1e-12)
    assert pi[1] == pytest.approx(0.7310585786300049, rel=1e-12)
    # kappa = 0 ignores regrets entirely
    assert np.allclose(bg_distribution(np.array([0.0, 9.0]), 0.0), 0.5)
    # permutation equivariance
    r = np.array([0.2, 0.0, 1.3])
    perm = np.array([2, 0, 1])
    assert np.allclose(bg_distribution(r[perm], 5.0),
                       bg_distribution(r, 5.0)[perm])
    # huge regrets stay finite thanks to max subtraction
    pi = bg_distribution(np.array([0.0, 1e6]), 10.0)
    assert np.isfinite(pi).all() and pi.sum() == pytest.approx(1.0)


def test_first_update_has_unit_gains():
    learner = ClusterLearner([0, 1], build_action_set([[1.0]]))
    learner.update(played=0, utility=-3.0)
    # t = 1 makes every gain 1: the utility estimate jumps to the sample,
    # regrets stay zero (old estimates were zero), and the policy moves to
    # the Boltzmann-Gibbs image of the old zero regrets, i.e. uniform
    assert np.array_equal(learner.utility_est, [-3.0, 0.0])
    assert np.array_equal(learner.regret_est, [0.0, 0.0])
    assert np.array_equal(learner.pi, [0.5, 0.5])
    assert learner.prev_utility == -3.0


def test_second_update_hand_computed():
    learner = ClusterLearner([0, 1], build_action_set([[1.0]]))
    learner.update(played=0, utility=-3.0)
    learner.update(played=1, utility=-1.0)
    # tau(2) = 2^-0.6; only the played action's utility estimate moves
    assert learner.utility_est[0] == pytest.approx(-3.0)
    assert learner.utility_est[1] == pytest.approx(-0.6597539553864471,
                                                   rel=1e-12)
    # iota(2) = 2^-0.7 against reference utility -3 and old estimates
    # [-3, 0]: regret advantage is 0 for action 0 and 3 for action 1
    assert learner.regret_est[0] == pytest.approx(0.0, abs=1e-15)
    assert learner.regret_est[1] == pytest.approx(1.8467166200173746,
                                                  rel=1e-12)
    # policy target was G(old regrets = 0) = uniform, so pi is unchanged
    assert np.allclose(learner.pi, [0.5, 0.5])
    assert learner.prev_utility == -1.0


def test_policy_stays_on_simplex():
    rng = np.random.default_rng(31)
    learner = ClusterLearner([0, 1, 2], build_action_set([[1.0]] * 3))
    for _ in range(2000):
        played = learner.sample(rng)
        learner.update(played, rng.uniform(-5.0, 0.0))
        assert np.all(learner.pi >= 0.0)
        assert abs(learner.pi.sum() - 1.0) <= 1e-9
        assert np.isfinite(learner.pi).all()


def test_concentrates_on_better_action():
    rng = np.random.default_rng(7)
    learner = ClusterLearner([0], build_action_set([[1.0]]))
    for _ in range(10000):
        played = learner.sample(rng)
        learner.update(played, 0.0 if played == 1 else -1.0)
    # the all-off action (index 1) dominates by a utility gap of 1
    assert learner.pi[1] > 0.7
    assert learner.pi[1] == learner.pi.max()


def test_sampling_matches_policy():
    rng = np.random.default_rng(0)
    learner = ClusterLearner([0], build_action_set([[1.0]]))
    learner.pi = np.array([0.25, 0.75])
    draws = np.array([learner.sample(rng) for _ in range(100000)])
    assert np.mean(draws == 1) == pytest.approx(0.75, abs=0.01)
    learner.pi = np.array([0.0, 1.0])
    assert all(learner.sample(rng) == 1 for _ in range(100))


def test_sampling_reproducible():
    learner = ClusterLearner([0, 1], build_action_set([[1.0], [1.0]]))
    a = [learner.sample(np.random.default_rng(99)) for _ in range(20)]
    b = [learner.sample(np.random.default_rng(99)) for _ in range(20)]
    assert a == b


def test_empty_action_set_rejected():
    with pytest.raises(ValueError):
        ClusterLearner([0], [])
