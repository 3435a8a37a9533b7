"""
Tests for the Volt-Var environment and reward.
"""
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from apps.gridflow.network import load_case
from apps.gridflow.newton import solve_newton_raphson
from apps.scenario.profiles import exogenous_injections, generate_profiles
from apps.shared.exceptions import ContractViolation
from apps.vvc_env.env import RewardBreakdown, VoltageLimits, VoltVarEnv, violation_rate

LIMITS = VoltageLimits()


def zero_load(net):
    return replace(net, buses=tuple(replace(bus, load_p=0.0, load_q=0.0) for bus in net.buses))


class ViolationRateTest(SimpleTestCase):
    def test_within_limits(self):
        self.assertEqual(violation_rate([0.95, 1.0, 1.05], LIMITS), 0.0)

    def test_one_high_bus(self):
        self.assertAlmostEqual(violation_rate([1.0, 1.06], LIMITS), -0.01)

    def test_low_and_high_buses(self):
        self.assertAlmostEqual(violation_rate([0.94, 1.07, 1.0], LIMITS), -0.03)

    def test_rows(self):
        rates = violation_rate(np.array([[1.0, 1.06], [0.94, 1.0]]), LIMITS)
        np.testing.assert_allclose(rates, [-0.01, -0.01])

    def test_invalid_limits(self):
        with self.assertRaises(ContractViolation):
            VoltageLimits(1.05, 0.95)

    def test_reward_decomposition(self):
        reward = RewardBreakdown.build(loss=0.2, r_v=-0.03, c_v=50.0)
        self.assertEqual(reward.r, reward.r_p + 50.0 * reward.r_v)
        self.assertEqual(reward.r_p, -0.2)


class EnvironmentTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.net = load_case('case33')
        cls.scenario = generate_profiles(cls.net, cls.net.devices, days=2, seed=4, steps_per_day=4)

    def test_zero_load_step(self):
        net = zero_load(self.net)
        env = VoltVarEnv(net, generate_profiles(net, net.devices, days=1, seed=0, steps_per_day=4))
        state = env.reset(0)
        np.testing.assert_allclose(state.v, 1.0, atol=1e-10)
        np.testing.assert_array_equal(state.q_c, 0.0)
        reward, _, _ = env.step(np.zeros(4))
        self.assertAlmostEqual(reward.r_p, 0.0, places=10)
        self.assertEqual(reward.r_v, 0.0)
        self.assertAlmostEqual(reward.r, 0.0, places=10)

    def test_state_shape(self):
        env = VoltVarEnv(self.net, self.scenario)
        state = env.reset(0)
        self.assertEqual(state.size, 3 * 33 + 4)
        self.assertEqual(env.features(state).shape, (env.feature_size,))

    def test_observation_matches_newton(self):
        env = VoltVarEnv(self.net, self.scenario)
        state = env.observe(0, 1, np.zeros(4))
        oracle = solve_newton_raphson(self.net, exogenous_injections(self.net, self.scenario, 0, 1))
        np.testing.assert_allclose(state.v, oracle.v, atol=1e-6)

    def test_setpoints_enter_state(self):
        env = VoltVarEnv(self.net, self.scenario)
        env.reset(0)
        action = np.array([0.5, -0.5, 1.0, 1.5])
        _, state, _ = env.step(action)
        np.testing.assert_array_equal(state.q_c, action)

    def test_reward_decomposes_every_step(self):
        env = VoltVarEnv(self.net, self.scenario)
        env.reset(0)
        rng = np.random.default_rng(0)
        for _ in range(8):
            action = rng.uniform(env.box.a_low, env.box.a_high)
            reward, _, _ = env.step(action)
            self.assertEqual(reward.r, reward.r_p + 50.0 * reward.r_v)
            self.assertLessEqual(reward.r_p, 0.0)
            self.assertLessEqual(reward.r_v, 0.0)
        self.assertTrue(env.finished)
        with self.assertRaises(ContractViolation):
            env.step(np.zeros(4))

    def test_done_at_end_of_day(self):
        env = VoltVarEnv(self.net, self.scenario)
        env.reset(0)
        flags = [env.step(np.zeros(4))[2] for _ in range(4)]
        self.assertEqual(flags, [False, False, False, True])
        self.assertEqual((env.day, env.step_index), (1, 0))

    def test_evaluate_keeps_cursor(self):
        env = VoltVarEnv(self.net, self.scenario)
        env.reset(0)
        first = env.evaluate(1, 2, np.zeros(4))
        second = env.evaluate(1, 2, np.zeros(4))
        self.assertEqual(first, second)
        self.assertEqual((env.day, env.step_index), (0, 0))

    def test_action_outside_box(self):
        env = VoltVarEnv(self.net, self.scenario)
        env.reset(0)
        with self.assertRaises(ContractViolation):
            env.step(np.array([0.0, 0.0, 0.0, -0.5]))
        with self.assertRaises(ContractViolation):
            env.step(np.zeros(3))

    def test_exogenous_next_state(self):
        env = VoltVarEnv(self.net, self.scenario)
        env.reset(0)
        _, after_zero, _ = env.step(np.zeros(4))
        env.reset(0)
        _, after_other, _ = env.step(np.array([1.0, 1.0, 1.0, 1.0]))
        exo = exogenous_injections(self.net, self.scenario, 0, 1)
        non_slack = self.net.non_slack
        np.testing.assert_allclose(after_zero.p[non_slack], exo.p[non_slack], atol=1e-6)
        np.testing.assert_allclose(after_other.p[non_slack], exo.p[non_slack], atol=1e-6)
