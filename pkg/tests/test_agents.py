import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erid.agents import (CrossLearningAgent, EridAgent, HedgeAgent, ProtocolKind, StepBoundError,
                         cross_learning_step, erid_delta, erid_step, hedge_step, max_stable_alpha,
                         sample_action)
from erid.dynamics import BoxBounds, Dynamics
from erid.games import PayoffRange
from erid.replay import AverageRewards
from erid.simplex import SimplexVector

PROTOCOLS = ["bnn", "smith", "srp"]


class TestEridDelta:
    @pytest.mark.parametrize("protocol", PROTOCOLS)
    def test_equal_rewards_give_zero(self, protocol):
        d = erid_delta(SimplexVector([0.2, 0.3, 0.5]), AverageRewards(np.full(3, 1.5), 1.5), protocol)
        np.testing.assert_array_equal(d, np.zeros(3))

    def test_bnn(self):
        d = erid_delta(SimplexVector([0.5, 0.5]), AverageRewards(np.array([1.0, 0.0]), 0.5), "bnn")
        np.testing.assert_allclose(d, [0.25, -0.25])

    def test_smith(self):
        d = erid_delta(SimplexVector([0.5, 0.5]), AverageRewards(np.array([1.0, 0.0]), 0.5), "smith")
        np.testing.assert_allclose(d, [0.5, -0.5])

    def test_srp_unit_box(self):
        d = erid_delta(SimplexVector([0.5, 0.5]), AverageRewards(np.array([1.0, 0.0]), 0.5), "srp")
        np.testing.assert_allclose(d, [0.25, -0.25])

    def test_srp_box_factors(self):
        # x = (0.5, 0.5), box [0.25, 0.75]^2: (x_j - l_j)(u_i - x_i) = 0.25 * 0.25
        box = BoxBounds([0.25, 0.25], [0.75, 0.75])
        d = erid_delta(SimplexVector([0.5, 0.5]), AverageRewards(np.array([1.0, 0.0]), 0.5),
                       ProtocolKind(Dynamics.SRP, box))
        np.testing.assert_allclose(d, [0.0625, -0.0625])

    def test_errors(self):
        with pytest.raises(ValueError):
            erid_delta(SimplexVector([0.5, 0.5]), AverageRewards(np.zeros(3), 0.0), "bnn")
        box = BoxBounds([0.3, 0.3], [0.7, 0.7])
        with pytest.raises(ValueError, match="box"):
            erid_delta(SimplexVector([0.9, 0.1]), AverageRewards(np.zeros(2), 0.0), ProtocolKind("srp", box))
        with pytest.raises(ValueError):
            ProtocolKind("replicator")
        with pytest.raises(ValueError):
            ProtocolKind("bnn", box)

    @given(st.sampled_from(PROTOCOLS), st.integers(2, 5), st.data())
    @settings(max_examples=300, deadline=None)
    def test_sums_to_zero(self, protocol, m, data):
        raw = np.asarray(data.draw(st.lists(st.floats(0.001, 1.0), min_size=m, max_size=m)))
        pi = raw / raw.sum()
        rbar = np.asarray(data.draw(st.lists(st.floats(-10, 10), min_size=m, max_size=m)))
        overall = data.draw(st.floats(-10, 10))
        d = erid_delta(SimplexVector(pi), AverageRewards(rbar, overall), protocol)
        assert abs(d.sum()) < 1e-12


class TestEridStep:
    def test_zero_rewards_never_move(self):
        agent = EridAgent([0.3, 0.7], alpha=0.1, buffer_size=5)
        for a in [0, 1, 1, 0, 0, 1, 0]:
            erid_step(agent, a, 0.0)
        np.testing.assert_array_equal(agent.policy, [0.3, 0.7])

    def test_single_push_trace(self):
        agent = EridAgent([0.5, 0.5], alpha=0.1, buffer_size=10, protocol="bnn")
        agent.step(0, 1.0)
        np.testing.assert_array_equal(agent.policy, [0.5, 0.5])

    def test_two_entry_trace(self):
        agent = EridAgent([0.5, 0.5], alpha=0.1, buffer_size=10, protocol="bnn")
        agent.step(0, 1.0)
        agent.step(1, 0.0)
        np.testing.assert_allclose(agent.policy, [0.525, 0.475], atol=1e-15)

    def test_step_bound_violation(self):
        agent = EridAgent([0.01, 0.99], alpha=1.0, buffer_size=10, protocol="smith")
        agent.step(0, 0.0)
        with pytest.raises(StepBoundError) as info:
            agent.step(1, 100.0)
        assert info.value.component == 0

    @pytest.mark.parametrize("protocol", PROTOCOLS)
    def test_forward_invariance_under_bound(self, protocol):
        rng = np.random.default_rng(11)
        rewards = PayoffRange(-2.0, 3.0)
        alpha = 0.99 * max_stable_alpha(3, rewards)
        agent = EridAgent([0.05, 0.05, 0.9], alpha=alpha, buffer_size=7, protocol=protocol)
        for _ in range(5000):
            a = agent.act(rng.random())
            agent.step(a, rng.uniform(rewards.r_min, rewards.r_max))
            assert np.all(agent.policy >= 0) and np.all(agent.policy <= 1)
            assert abs(agent.policy.sum() - 1) < 1e-9

    def test_srp_stays_in_box(self):
        rng = np.random.default_rng(5)
        box = BoxBounds([0.1, 0.1, 0.1], [0.6, 0.6, 0.6])
        rewards = PayoffRange(-1.0, 1.0)
        # box widths shrink the effective step: 0.5 * 0.5 per pair
        alpha = 0.9 * max_stable_alpha(3, rewards)
        agent = EridAgent([1 / 3] * 3, alpha=alpha, buffer_size=5, protocol=ProtocolKind("srp", box))
        for _ in range(5000):
            a = agent.act(rng.random())
            agent.step(a, rng.uniform(-1, 1) + (a == 0))
            assert box.contains(agent.policy)

    def test_srp_initial_outside_box(self):
        box = BoxBounds([0.3, 0.3], [0.7, 0.7])
        with pytest.raises(ValueError):
            EridAgent([0.9, 0.1], protocol=ProtocolKind("srp", box))

    def test_max_stable_alpha(self):
        assert max_stable_alpha(2, PayoffRange(-1, 1)) == 0.25
        assert max_stable_alpha(2, PayoffRange(0, 0)) == math.inf


class TestCrossLearning:
    def test_zero_normalized_reward(self):
        agent = CrossLearningAgent([0.3, 0.7], 0.5, PayoffRange(-1, 1))
        cross_learning_step(agent, 0, -1.0)
        np.testing.assert_array_equal(agent.policy, [0.3, 0.7])

    def test_example(self):
        agent = CrossLearningAgent([0.5, 0.5], 0.1, PayoffRange(0, 1))
        agent.step(0, 1.0)
        np.testing.assert_allclose(agent.policy, [0.55, 0.45])

    def test_pure_policy_stays(self):
        agent = CrossLearningAgent([1.0, 0.0], 0.7, PayoffRange(-3, 3))
        agent.step(0, 2.0)
        np.testing.assert_array_equal(agent.policy, [1.0, 0.0])

    def test_errors(self):
        with pytest.raises(ValueError):
            CrossLearningAgent([0.5, 0.5], 1.5, PayoffRange(0, 1))
        agent = CrossLearningAgent([0.5, 0.5], 0.5, PayoffRange(0, 1))
        with pytest.raises(ValueError):
            agent.step(0, 2.0)
        with pytest.raises(ValueError):
            CrossLearningAgent([0.5, 0.5], 0.5, PayoffRange(1, 1)).step(0, 0.0)

    @given(st.floats(0, 1), st.lists(st.tuples(st.integers(0, 2), st.floats(-4, 4)), max_size=50))
    @settings(max_examples=200, deadline=None)
    def test_simplex_preserved(self, alpha, seq):
        agent = CrossLearningAgent([0.2, 0.3, 0.5], alpha, PayoffRange(-4, 4))
        for a, r in seq:
            agent.step(a, r)
            assert np.all(agent.policy >= 0)
            assert abs(agent.policy.sum() - 1) < 1e-9


class TestHedge:
    def test_zero_payoffs(self):
        agent = HedgeAgent([0.5, 0.5], 0.3)
        for _ in range(10):
            hedge_step(agent, [0.0, 0.0])
        np.testing.assert_allclose(agent.policy, [0.5, 0.5])

    def test_softmax_example(self):
        agent = HedgeAgent([0.5, 0.5], 1.0).step([1.0, 0.0])
        e = math.e
        np.testing.assert_allclose(agent.policy, [e / (e + 1), 1 / (e + 1)], atol=1e-15)
        assert agent.policy[0] == pytest.approx(0.7311, abs=5e-5)

    def test_shift_invariance(self):
        a = HedgeAgent([0.2, 0.8], 0.5).step([1.0, -2.0])
        b = HedgeAgent([0.2, 0.8], 0.5).step([11.0, 8.0])
        np.testing.assert_allclose(a.policy, b.policy, atol=1e-15)

    def test_nonuniform_start_is_prior(self):
        agent = HedgeAgent([0.2, 0.8], 1.0)
        np.testing.assert_allclose(agent.policy, [0.2, 0.8])
        agent.step([0.0, 0.0])
        np.testing.assert_allclose(agent.policy, [0.2, 0.8])

    def test_strictly_positive(self):
        agent = HedgeAgent([1 / 3] * 3, 0.01)
        for _ in range(100):
            agent.step([50.0, -50.0, 0.0])
        assert np.all(agent.policy > 0)

    def test_errors(self):
        with pytest.raises(ValueError):
            HedgeAgent([0.5, 0.5], 1.0).step([np.nan, 0.0])
        with pytest.raises(ValueError):
            HedgeAgent([0.5, 0.5], 1.0).step([0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            HedgeAgent([1.0, 0.0], 1.0)


class TestSampling:
    def test_inverse_cdf(self):
        p = np.array([0.2, 0.0, 0.8])
        assert sample_action(p, 0.0) == 0
        assert sample_action(p, 0.1999) == 0
        assert sample_action(p, 0.2) == 2
        assert sample_action(p, 0.999999) == 2

    def test_frequencies(self):
        rng = np.random.default_rng(0)
        p = np.array([0.1, 0.6, 0.3])
        draws = [sample_action(p, u) for u in rng.random(20_000)]
        np.testing.assert_allclose(np.bincount(draws, minlength=3) / 20_000, p, atol=0.015)
