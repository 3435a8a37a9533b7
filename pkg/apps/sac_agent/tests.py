"""
Tests for the replay buffer, the soft actor-critic updates and the day loop.
"""
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.actionspace.mapping import FULL, RESIDUAL, WIDE, ResidualActionSpace, ResidualConfig
from apps.gridflow.network import load_case
from apps.sac_agent.agent import EVAL, TRAIN, AgentHyperParams, SacAgent, stack_transitions
from apps.sac_agent.buffer import MdpTransition, ReplayBuffer
from apps.sac_agent.training import evaluate_day, train_day_loop
from apps.scenario.profiles import generate_profiles
from apps.shared.exceptions import ContractViolation, NumericalError
from apps.vvc_env.env import VoltVarEnv

SMALL = AgentHyperParams(hidden=(16, 16), batch_size=8, buffer_size=64, random_steps=4)


def random_batch(rng, rows=8, features=3, actions=2):
    return stack_transitions([
        MdpTransition(rng.normal(size=features), rng.uniform(-0.9, 0.9, size=actions), float(rng.normal()),
                      rng.normal(size=features), bool(rng.integers(2)))
        for _ in range(rows)
    ])


def constant_critics(agent, value):
    for critic in agent.critics:
        critic.weights[-1][...] = 0.0
        critic.biases[-1][...] = value


class ReplayBufferTest(SimpleTestCase):
    def test_ring_overwrites_oldest(self):
        buffer = ReplayBuffer(3, 1, 1, rng=np.random.default_rng(0))
        for k in range(5):
            buffer.add(MdpTransition(np.array([k]), np.array([0.0]), float(k), np.array([k]), False))
        self.assertEqual(len(buffer), 3)
        self.assertEqual(sorted(buffer.r.tolist()), [2.0, 3.0, 4.0])

    def test_sampling_is_uniform(self):
        buffer = ReplayBuffer(4, 1, 1, rng=np.random.default_rng(1))
        for k in range(4):
            buffer.add(MdpTransition(np.array([k]), np.array([0.0]), float(k), np.array([k]), False))
        counts = np.bincount(buffer.sample(40_000).r.astype(int), minlength=4) / 40_000
        np.testing.assert_allclose(counts, 0.25, atol=0.01)

    def test_rejects_mapped_actions(self):
        buffer = ReplayBuffer(4, 1, 1)
        with self.assertRaises(ContractViolation):
            buffer.add(MdpTransition(np.zeros(1), np.array([1.0]), 0.0, np.zeros(1), False))
        with self.assertRaises(ContractViolation):
            buffer.add(MdpTransition(np.zeros(1), np.array([0.0]), float('nan'), np.zeros(1), False))


class ActTest(SimpleTestCase):
    def test_eval_is_deterministic(self):
        agent = SacAgent(3, 2, SMALL, seed=0)
        s = np.array([0.2, -0.1, 0.4])
        np.testing.assert_array_equal(agent.act(s, EVAL), agent.act(s, EVAL))

    def test_random_phase_is_uniform(self):
        agent = SacAgent(3, 2, AgentHyperParams(hidden=(8,), random_steps=960), seed=1)
        draws = np.array([agent.act(np.zeros(3), TRAIN) for _ in range(10_000)])
        self.assertLess(np.abs(draws.mean(axis=0)).max(), 0.03)
        self.assertTrue(np.all(np.abs(draws) < 1.0))

    def test_policy_samples_inside_open_interval(self):
        agent = SacAgent(3, 2, SMALL, seed=2)
        agent.env_steps = SMALL.random_steps
        draws = np.array([agent.act(np.array([50.0, -50.0, 20.0]), TRAIN) for _ in range(500)])
        self.assertTrue(np.all(np.abs(draws) < 1.0))

    def test_unknown_mode(self):
        with self.assertRaises(ContractViolation):
            SacAgent(3, 2, SMALL).act(np.zeros(3), 'explore')


class CriticUpdateTest(SimpleTestCase):
    def test_exact_critics_have_zero_loss(self):
        agent = SacAgent(3, 2, SMALL, seed=3)
        batch = random_batch(np.random.default_rng(0))
        batch = replace(batch, r=np.full(len(batch), 0.7))
        constant_critics(agent, 0.7)
        before = [p.copy() for p in agent.critics[0].parameters()]
        self.assertEqual(agent.critic_update(batch), 0.0)
        for old, new in zip(before, agent.critics[0].parameters()):
            np.testing.assert_array_equal(old, new)

    def test_constant_critic_closed_form(self):
        agent = SacAgent(3, 2, SMALL, seed=4)
        constant_critics(agent, 0.25)
        batch = replace(random_batch(np.random.default_rng(1)), r=np.full(8, -1.0))
        losses, _, _ = agent.critic_losses(batch)
        np.testing.assert_allclose(losses, [1.5625, 1.5625], rtol=1e-12)

    def test_loss_matches_direct_evaluation(self):
        agent = SacAgent(3, 2, SMALL, seed=5)
        batch = random_batch(np.random.default_rng(2))
        expected = np.mean([np.mean((critic.forward(np.hstack([batch.s, batch.a_rp]))[:, 0] - batch.r) ** 2)
                            for critic in agent.critics])
        self.assertAlmostEqual(agent.critic_update(batch), expected, delta=1e-10)

    def test_zero_gamma_matches_single_period(self):
        batch = random_batch(np.random.default_rng(3))
        single = SacAgent(3, 2, SMALL, seed=6)
        discounted = SacAgent(3, 2, replace(SMALL, gamma=0.9), seed=6)
        self.assertIsNone(single.target_critics)
        self.assertEqual(len(discounted.target_critics), 2)
        single_losses, single_targets, _ = single.critic_losses(batch)
        zero_losses, zero_targets, _ = discounted.critic_losses(batch, gamma=0.0)
        np.testing.assert_array_equal(single_targets, zero_targets)
        self.assertEqual(single_losses, zero_losses)

    def test_discounted_targets_use_next_state(self):
        agent = SacAgent(3, 2, replace(SMALL, gamma=0.9), seed=7)
        batch = replace(random_batch(np.random.default_rng(4)), d=np.zeros(8))
        targets = agent.critic_targets(batch)
        self.assertFalse(np.allclose(targets, batch.r))
        agent.critic_update(batch)
        changed = any(not np.array_equal(t, c) for t, c in
                      zip(agent.target_critics[0].parameters(), agent.critics[0].parameters()))
        self.assertTrue(changed)

    def test_nan_loss_aborts(self):
        agent = SacAgent(3, 2, SMALL, seed=8)
        agent.critics[0].biases[-1][0] = np.nan
        with self.assertRaises(NumericalError):
            agent.critic_update(random_batch(np.random.default_rng(5)))


class ActorUpdateTest(SimpleTestCase):
    def test_flat_objective_gives_no_gradient(self):
        agent = SacAgent(3, 2, SMALL, seed=9)
        constant_critics(agent, 1.0)
        agent.log_alpha[0] = -np.inf
        before = [p.copy() for p in agent.actor.parameters()]
        agent.actor_update(random_batch(np.random.default_rng(6)))
        for old, new in zip(before, agent.actor.parameters()):
            np.testing.assert_array_equal(old, new)

    def test_loss_matches_direct_evaluation(self):
        agent = SacAgent(3, 2, SMALL, seed=10)
        batch = random_batch(np.random.default_rng(7))
        noise = np.random.default_rng(8).standard_normal((8, 2))
        sample = agent.actor.sample(batch.s, noise)
        q = [critic.forward(np.hstack([batch.s, sample.a_rp]))[:, 0] for critic in agent.critics]
        expected = np.mean(agent.alpha * sample.log_prob - np.minimum(q[0], q[1]))
        self.assertAlmostEqual(agent.actor_update(batch, noise), expected, delta=1e-10)

    def test_twin_critic_symmetry(self):
        agent = SacAgent(3, 2, SMALL, seed=11)
        batch = random_batch(np.random.default_rng(9))
        noise = np.random.default_rng(10).standard_normal((8, 2))
        loss, _, _ = agent.actor_loss(batch.s, noise)
        agent.critics.reverse()
        swapped, _, _ = agent.actor_loss(batch.s, noise)
        self.assertEqual(loss, swapped)

    def test_bandit_converges(self):
        params = AgentHyperParams(hidden=(64, 64), batch_size=128, buffer_size=10_000, critic_lr=1e-3,
                                  actor_lr=1e-3, alpha_lr=1e-3, initial_alpha=0.1, random_steps=500)
        agent = SacAgent(1, 1, params, seed=0)
        s = np.ones(1)
        for _ in range(2500):
            a_rp = agent.act(s, TRAIN)
            agent.record(MdpTransition(s, a_rp, -(a_rp[0] - 0.5) ** 2, s, True))
            if agent.ready():
                for _ in range(params.updates_per_step):
                    agent.update()
        self.assertLessEqual(agent.updates, 20_000)
        self.assertLess(abs(agent.act(s, EVAL)[0] - 0.5), 0.05)


class TemperatureUpdateTest(SimpleTestCase):
    def setUp(self):
        self.agent = SacAgent(3, 2, SMALL, seed=12)
        self.batch = random_batch(np.random.default_rng(11))

    def test_stationary_at_target(self):
        alpha = self.agent.alpha
        self.assertEqual(self.agent.temperature_update(self.batch, np.full(8, 2.0)), alpha)

    def test_low_entropy_raises_alpha(self):
        alpha = self.agent.alpha
        self.assertGreater(self.agent.temperature_update(self.batch, np.full(8, 3.0)), alpha)

    def test_high_entropy_lowers_alpha(self):
        alpha = self.agent.alpha
        self.assertLess(self.agent.temperature_update(self.batch, np.full(8, 0.0)), alpha)


class AgentLifecycleTest(SimpleTestCase):
    def fill(self, agent, rng):
        for _ in range(16):
            agent.record(MdpTransition(rng.normal(size=3), rng.uniform(-0.9, 0.9, size=2), float(rng.normal()),
                                       rng.normal(size=3), False))

    def test_bitwise_reproducible(self):
        first, second = SacAgent(3, 2, SMALL, seed=13), SacAgent(3, 2, SMALL, seed=13)
        self.fill(first, np.random.default_rng(12))
        self.fill(second, np.random.default_rng(12))
        for _ in range(10):
            first.update()
            second.update()
        for a, b in zip(first.actor.parameters() + first.critics[1].parameters(),
                        second.actor.parameters() + second.critics[1].parameters()):
            np.testing.assert_array_equal(a, b)
        self.assertEqual(first.alpha, second.alpha)

    def test_save_and_load(self):
        agent = SacAgent(3, 2, SMALL, seed=14)
        self.fill(agent, np.random.default_rng(13))
        agent.update()
        s = np.array([0.3, 0.1, -0.2])
        with tempfile.TemporaryDirectory() as tmp:
            restored = SacAgent.load(agent.save(Path(tmp) / 'agent'), SMALL)
        np.testing.assert_array_equal(restored.act(s, EVAL), agent.act(s, EVAL))
        self.assertEqual(restored.alpha, agent.alpha)
        self.assertEqual(restored.env_steps, 16)


class DayLoopTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.net = load_case('case33')
        cls.scenario = generate_profiles(cls.net, cls.net.devices, days=2, seed=0, steps_per_day=4)
        cls.a_m = np.array([0.2, -0.1, 0.3, 1.0])

    def reference(self, day, step):
        return self.a_m

    def run_loop(self, agent, space, reference):
        rows = []
        env, test_env = VoltVarEnv(self.net, self.scenario), VoltVarEnv(self.net, self.scenario)
        train_day_loop(env, test_env, agent, space, reference, range(2), rows.extend)
        return rows

    def test_one_row_per_step(self):
        env = VoltVarEnv(self.net, self.scenario)
        agent = SacAgent(env.feature_size, 4, SMALL, seed=0)
        rows = self.run_loop(agent, ResidualActionSpace(env.box, FULL), None)
        self.assertEqual([(r.day, r.step) for r in rows], [(d, s) for d in range(2) for s in range(4)])
        self.assertTrue(all(np.isfinite(r.test_reward) for r in rows))
        self.assertTrue(all(r.reference_action_norm == 0.0 for r in rows))
        self.assertTrue(np.isnan(rows[0].critic_loss))
        self.assertTrue(np.isfinite(rows[-1].critic_loss))
        self.assertEqual(agent.env_steps, 8)

    def test_zero_lambda_reproduces_reference_control(self):
        env = VoltVarEnv(self.net, self.scenario)
        agent = SacAgent(env.feature_size, 4, SMALL, seed=0)
        residual = self.run_loop(agent, ResidualActionSpace(env.box, RESIDUAL,
                                                            ResidualConfig.from_lambda(0.0, env.box)),
                                 self.reference)
        baseline = self.run_loop(None, ResidualActionSpace(env.box, WIDE), self.reference)
        for left, right in zip(residual, baseline):
            self.assertEqual(left.train_reward, right.train_reward)
            self.assertEqual(left.test_reward, right.test_reward)
            self.assertEqual(left.test_ploss, right.test_ploss)
            self.assertEqual(left.test_violation, right.test_violation)
            self.assertEqual(left.train_reward, left.test_reward)

    def test_reproducible(self):
        env = VoltVarEnv(self.net, self.scenario)
        space = ResidualActionSpace(env.box, RESIDUAL, ResidualConfig.from_lambda(0.3, env.box))
        first = self.run_loop(SacAgent(env.feature_size, 4, SMALL, seed=5), space, self.reference)
        second = self.run_loop(SacAgent(env.feature_size, 4, SMALL, seed=5), space, self.reference)
        self.assertEqual(first, second)

    def test_evaluation_uses_deterministic_policy(self):
        env = VoltVarEnv(self.net, self.scenario)
        agent = SacAgent(env.feature_size, 4, SMALL, seed=1)
        space = ResidualActionSpace(env.box, RESIDUAL, ResidualConfig.from_lambda(0.3, env.box))
        first = evaluate_day(VoltVarEnv(self.net, self.scenario), agent, space, self.reference, 1)
        second = evaluate_day(VoltVarEnv(self.net, self.scenario), agent, space, self.reference, 1)
        self.assertEqual(first, second)
        self.assertEqual(agent.env_steps, 0)
