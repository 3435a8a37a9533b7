"""
Tests for the numpy function-approximator stack.
"""
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from apps.neural.adam import AdamState, adam_step
from apps.neural.checkpoint import load_checkpoint, save_checkpoint
from apps.neural.mlp import Mlp
from apps.neural.policy import GaussianPolicyHead, squashed_log_prob
from apps.shared.exceptions import ConfigurationError, ContractViolation, NumericalError

FD_STEP = 1e-5
FD_TOLERANCE = 1e-4


def zero_mlp(sizes):
    return Mlp(sizes, weights=[np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
               biases=[np.zeros(b) for b in sizes[1:]])


def relative_error(analytic, numeric):
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-6)


def finite_difference(params, loss):
    """Central differences of ``loss()`` over every entry of every parameter array."""
    grads = []
    for p in params:
        grad = np.zeros_like(p)
        for index in np.ndindex(p.shape):
            original = p[index]
            p[index] = original + FD_STEP
            plus = loss()
            p[index] = original - FD_STEP
            minus = loss()
            p[index] = original
            grad[index] = (plus - minus) / (2 * FD_STEP)
        grads.append(grad)
    return grads


class MlpForwardTest(SimpleTestCase):
    def test_zero_network(self):
        net = zero_mlp((4, 6, 6, 2))
        np.testing.assert_array_equal(net.forward(np.arange(4.0)), np.zeros(2))

    def test_identity_layers_rectify(self):
        net = Mlp((3, 3, 3), weights=[np.eye(3), np.eye(3)], biases=[np.zeros(3), np.zeros(3)])
        np.testing.assert_array_equal(net.forward(np.array([-1.0, 0.5, 2.0])), [0.0, 0.5, 2.0])

    def test_matches_naive_evaluation(self):
        rng = np.random.default_rng(0)
        net = Mlp((5, 7, 7, 3), rng=rng)
        x = rng.normal(size=5)
        hidden = x
        for k, (w, b) in enumerate(zip(net.weights, net.biases)):
            hidden = np.array([sum(hidden[i] * w[i, j] for i in range(w.shape[0])) + b[j]
                               for j in range(w.shape[1])])
            if k < len(net.weights) - 1:
                hidden = np.array([max(value, 0.0) for value in hidden])
        np.testing.assert_allclose(net.forward(x), hidden, rtol=0, atol=1e-12)

    def test_width_mismatch(self):
        with self.assertRaises(ContractViolation):
            Mlp((3, 2)).forward(np.zeros(4))

    def test_default_float64(self):
        net = Mlp((3, 512, 512, 2), rng=np.random.default_rng(1))
        self.assertTrue(all(p.dtype == np.float64 for p in net.parameters()))


class MlpBackwardTest(SimpleTestCase):
    def test_linear_least_squares(self):
        rng = np.random.default_rng(2)
        net = Mlp((3, 1), rng=rng)
        x = rng.normal(size=(10, 3))
        target = rng.normal(size=(10, 1))
        residual = net.forward(x) - target
        grads, _ = net.backward(residual)
        np.testing.assert_allclose(grads[0], x.T @ residual, atol=1e-12)
        np.testing.assert_allclose(grads[1], residual.sum(axis=0), atol=1e-12)

    def test_finite_difference(self):
        rng = np.random.default_rng(3)
        net = Mlp((4, 8, 8, 3), rng=rng)
        x = rng.normal(size=(6, 4))
        weight = rng.normal(size=(6, 3))

        def loss():
            return float(np.sum(weight * net.forward(x) ** 2))

        out = net.forward(x)
        grads, grad_x = net.backward(2 * weight * out)
        numeric = finite_difference(net.parameters(), loss)
        for analytic, approx in zip(grads, numeric):
            self.assertLess(relative_error(analytic, approx).max(), FD_TOLERANCE)
        numeric_x = finite_difference([x], loss)[0]
        self.assertLess(relative_error(grad_x, numeric_x).max(), FD_TOLERANCE)

    def test_zero_upstream(self):
        net = Mlp((4, 8, 2), rng=np.random.default_rng(4))
        net.forward(np.ones((3, 4)))
        grads, _ = net.backward(np.zeros((3, 2)))
        for grad in grads:
            np.testing.assert_array_equal(grad, 0.0)

    def test_backward_needs_forward(self):
        with self.assertRaises(ContractViolation):
            Mlp((2, 2)).backward(np.zeros(2))

    def test_polyak_update(self):
        target = zero_mlp((2, 3, 1))
        source = Mlp((2, 3, 1), rng=np.random.default_rng(5))
        target.polyak_update(source, 0.995)
        for t, s in zip(target.parameters(), source.parameters()):
            np.testing.assert_allclose(t, 0.005 * s)
        clone = source.copy()
        clone.weights[0][0, 0] += 1.0
        self.assertNotEqual(clone.weights[0][0, 0], source.weights[0][0, 0])


class PolicyHeadTest(SimpleTestCase):
    def test_zero_noise_zero_mean(self):
        head = GaussianPolicyHead(3, 2, net=zero_mlp((3, 4, 4)))
        sample = head.sample(np.ones(3), np.zeros(2))
        np.testing.assert_array_equal(sample.a_rp, 0.0)

    def test_direct_evaluation(self):
        head = GaussianPolicyHead(3, 1, net=zero_mlp((3, 4, 2)))
        sample = head.sample(np.ones(3), np.ones(1))
        self.assertAlmostEqual(sample.a_rp[0], np.tanh(1.0))
        self.assertAlmostEqual(sample.a_rp[0], 0.7616, places=4)

    def test_density_integrates_to_one(self):
        for mean, log_std in ((0.0, 0.0), (0.3, -0.2), (-0.5, -0.5)):
            def density(a):
                return np.exp(squashed_log_prob(np.array([np.arctanh(a)]), mean, log_std))
            total, _ = integrate.quad(density, -1.0, 1.0, limit=200)
            self.assertAlmostEqual(total, 1.0, delta=1e-4)

    def test_log_std_clamp(self):
        net = zero_mlp((2, 3, 2))
        net.biases[-1][1] = 10.0
        head = GaussianPolicyHead(2, 1, net=net)
        _, log_std = head.distribution(np.zeros(2))
        self.assertEqual(log_std[0], 2.0)

    def test_samples_inside_open_interval(self):
        rng = np.random.default_rng(6)
        head = GaussianPolicyHead(3, 2, hidden=(16, 16), rng=rng)
        sample = head.sample(rng.normal(size=(500, 3)), rng.normal(size=(500, 2)) * 3)
        self.assertTrue(np.all(np.abs(sample.a_rp) < 1.0))

    def test_log_prob_gradient(self):
        rng = np.random.default_rng(7)
        head = GaussianPolicyHead(3, 2, hidden=(8, 8), rng=rng)
        s = rng.normal(size=(5, 3))
        noise = rng.normal(size=(5, 2))
        action_weight = rng.normal(size=(5, 2))

        def loss():
            sample = head.sample(s, noise)
            return float(np.sum(sample.log_prob) + np.sum(action_weight * sample.a_rp))

        sample = head.sample(s, noise)
        grads = head.backward(sample, action_weight, np.ones(5))
        numeric = finite_difference(head.parameters(), loss)
        for analytic, approx in zip(grads, numeric):
            self.assertLess(relative_error(analytic, approx).max(), FD_TOLERANCE)

    def test_deterministic_action(self):
        head = GaussianPolicyHead(3, 2, hidden=(8,), rng=np.random.default_rng(8))
        s = np.array([0.1, -0.4, 0.3])
        np.testing.assert_array_equal(head.deterministic(s), head.deterministic(s))
        mean, _ = head.distribution(s)
        np.testing.assert_array_equal(head.deterministic(s), np.tanh(mean))


class AdamTest(SimpleTestCase):
    def test_zero_gradient(self):
        x = np.array([1.0, -2.0])
        state = AdamState.for_params([x], lr=0.1)
        adam_step(state, [x], [np.zeros(2)])
        np.testing.assert_array_equal(x, [1.0, -2.0])

    def test_first_step_is_sign(self):
        x = np.zeros(3)
        state = AdamState.for_params([x], lr=3e-4)
        adam_step(state, [x], [np.array([0.5, -4.0, 2.0])])
        np.testing.assert_allclose(x, [-3e-4, 3e-4, -3e-4], rtol=1e-6)

    def test_quadratic_bowl(self):
        optimum = np.array([0.5, -0.3, 0.2])
        x = np.zeros(3)
        state = AdamState.for_params([x], lr=5e-4)
        for _ in range(10_000):
            adam_step(state, [x], [2.0 * (x - optimum)])
        self.assertLess(np.abs(x - optimum).max(), 1e-3)

    def test_nan_gradient_aborts(self):
        x = np.zeros(2)
        state = AdamState.for_params([x], lr=1e-3)
        with self.assertRaises(NumericalError) as ctx:
            adam_step(state, [x], [np.array([np.nan, 0.0])], label='critic')
        self.assertEqual(ctx.exception.diagnostics['nan'], 1)
        np.testing.assert_array_equal(x, 0.0)


class CheckpointTest(SimpleTestCase):
    def test_save_and_load(self):
        actor = Mlp((3, 4, 2), rng=np.random.default_rng(9))
        critic = Mlp((5, 4, 1), rng=np.random.default_rng(10))
        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / 'agent', {'actor': actor, 'critic1': critic}, {'log_alpha': -0.5})
            self.assertEqual(path.suffix, '.npz')
            networks, extra = load_checkpoint(path)
        self.assertEqual(extra, {'log_alpha': -0.5})
        self.assertEqual(networks['critic1'].sizes, (5, 4, 1))
        for loaded, original in zip(networks['actor'].parameters(), actor.parameters()):
            np.testing.assert_array_equal(loaded, original)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_checkpoint('/nonexistent/agent.npz')
