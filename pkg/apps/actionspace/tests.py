"""
Tests for the pre-action and residual-action mappings.
"""
import numpy as np
from django.test import SimpleTestCase

from apps.actionspace.mapping import (
    FULL, RESIDUAL, WIDE, ActionBox, ActionGuard, ResidualActionSpace, ResidualBounds, ResidualConfig,
    compose, linear_map, map_residual, preaction_for, residual_bounds, wide_bounds,
)
from apps.shared.exceptions import ContractViolation

SYMMETRIC = ActionBox(np.array([-2.0]), np.array([2.0]))


class LinearMapTest(SimpleTestCase):
    def test_midpoint(self):
        box = ActionBox(np.array([0.0]), np.array([2.0]))
        self.assertEqual(linear_map([0.0], box)[0], 1.0)

    def test_upper_limit(self):
        box = ActionBox(np.array([0.0]), np.array([2.0]))
        self.assertAlmostEqual(linear_map([1.0 - 1e-12], box)[0], 2.0, places=10)

    def test_hand_evaluation(self):
        self.assertAlmostEqual(linear_map([0.25], SYMMETRIC)[0], 0.5)

    def test_closed_endpoint_rejected(self):
        with self.assertRaises(ContractViolation):
            linear_map([1.0], SYMMETRIC)

    def test_inverted_box_rejected(self):
        with self.assertRaises(ContractViolation):
            ActionBox(np.array([1.0]), np.array([1.0]))

    def test_preaction_shrinks_with_box(self):
        box = ActionBox(np.array([-2.0, 0.0]), np.array([2.0, 2.0]))
        target = np.array([0.7, 1.4])
        base = preaction_for(target, box)
        for kappa in (2.0, 4.0):
            enlarged = preaction_for(target, box.scaled(kappa))
            np.testing.assert_allclose(np.abs(enlarged), np.abs(base) / kappa, rtol=1e-12)
            np.testing.assert_allclose(linear_map(enlarged, box.scaled(kappa)), target, rtol=1e-12)


class ResidualBoundsTest(SimpleTestCase):
    def config(self, delta):
        return ResidualConfig(delta=np.array([delta]), lambda_scale=delta / 2)

    def test_interior(self):
        rb = residual_bounds([0.0], self.config(0.5), SYMMETRIC)
        self.assertEqual((rb.lo[0], rb.hi[0]), (-0.5, 0.5))

    def test_near_upper_edge(self):
        rb = residual_bounds([1.8], self.config(0.5), SYMMETRIC)
        self.assertAlmostEqual(rb.lo[0], -0.5)
        self.assertAlmostEqual(rb.hi[0], 0.2)

    def test_at_upper_edge(self):
        rb = residual_bounds([2.0], self.config(0.5), SYMMETRIC)
        self.assertEqual((rb.lo[0], rb.hi[0]), (-0.5, 0.0))

    def test_near_lower_edge(self):
        rb = residual_bounds([-1.9], self.config(0.5), SYMMETRIC)
        self.assertAlmostEqual(rb.lo[0], -0.1)
        self.assertAlmostEqual(rb.hi[0], 0.5)

    def test_outside_reference_is_clamped_and_counted(self):
        guard = ActionGuard()
        with self.assertLogs('apps.actionspace.mapping', level='WARNING'):
            rb = residual_bounds([2.3], self.config(0.5), SYMMETRIC, guard=guard)
        self.assertEqual(guard.clamp_events, 1)
        self.assertEqual(rb.hi[0], 0.0)

    def test_lambda_config(self):
        box = ActionBox(np.array([-1.3, 0.0]), np.array([1.3, 2.0]))
        cfg = ResidualConfig.from_lambda(0.3, box)
        np.testing.assert_allclose(cfg.delta, [0.39, 0.3])
        with self.assertRaises(ContractViolation):
            ResidualConfig.from_lambda(1.5, box)

    def test_lambda_zero_collapses(self):
        box = ActionBox(np.array([-1.3, 0.0]), np.array([1.3, 2.0]))
        a_m = np.array([0.4, 1.1])
        rb = residual_bounds(a_m, ResidualConfig.from_lambda(0.0, box), box)
        np.testing.assert_array_equal(rb.lo, 0.0)
        np.testing.assert_array_equal(rb.hi, 0.0)
        a_r = map_residual([0.9, -0.7], rb)
        np.testing.assert_array_equal(compose(a_m, a_r, box), a_m)

    def test_wide_bounds_reach_whole_box(self):
        box = ActionBox(np.array([-1.3, 0.0]), np.array([1.3, 2.0]))
        rb = wide_bounds(np.zeros(2), box)
        a_rp = np.array([0.3, -0.6])
        np.testing.assert_allclose(map_residual(a_rp, rb), linear_map(a_rp, box))


class MapResidualTest(SimpleTestCase):
    def test_symmetric_midpoint(self):
        self.assertEqual(map_residual([0.0], ResidualBounds([-0.5], [0.5]))[0], 0.0)

    def test_asymmetric_midpoint(self):
        self.assertAlmostEqual(map_residual([0.0], ResidualBounds([-0.5], [0.2]))[0], -0.15)

    def test_asymmetric_upper_limit(self):
        value = map_residual([1.0 - 1e-12], ResidualBounds([-0.5], [0.2]))[0]
        self.assertAlmostEqual(value, 0.2, places=10)
        self.assertLess(value, 0.2)

    def test_odd_inside_box(self):
        rb = residual_bounds([0.1], ResidualConfig(np.array([0.5]), 0.25), SYMMETRIC)
        for a_rp in (0.1, 0.5, 0.93):
            self.assertEqual(map_residual([a_rp], rb)[0], -map_residual([-a_rp], rb)[0])

    def test_rejects_closed_endpoint(self):
        with self.assertRaises(ContractViolation):
            map_residual([-1.0], ResidualBounds([-0.5], [0.5]))


class ComposeTest(SimpleTestCase):
    def test_upper_bound_reached_not_exceeded(self):
        self.assertEqual(compose([1.8], [0.2], SYMMETRIC)[0], 2.0)

    def test_zero_residual(self):
        np.testing.assert_array_equal(compose([0.37], [0.0], SYMMETRIC), [0.37])

    def test_containment_sweep(self):
        rng = np.random.default_rng(2024)
        draws, dim = 100_000, 4
        low = rng.uniform(-3.0, 1.0, size=(draws, dim))
        high = low + rng.uniform(1e-3, 4.0, size=(draws, dim))
        a_m = rng.uniform(low, high)
        delta = rng.uniform(0.0, 1.0, size=(draws, dim)) * (high - low) / 2 * 2.5
        a_rp = rng.uniform(-1.0, 1.0, size=(draws, dim)) * (1.0 - 1e-15)
        # Vectorised over all draws: the functions are elementwise.
        box = ActionBox(low, high)
        rb = residual_bounds(a_m, ResidualConfig(delta, 0.5), box)
        unclipped = a_m + map_residual(a_rp, rb)
        self.assertEqual(int(np.count_nonzero(unclipped < low)), 0)
        self.assertEqual(int(np.count_nonzero(unclipped > high)), 0)
        self.assertTrue(np.all(a_m + rb.lo >= low))
        self.assertTrue(np.all(a_m + rb.hi <= high))
        self.assertTrue(np.all(rb.lo <= rb.hi))

    def test_bounds_at_box_edges_are_exact(self):
        box = ActionBox(np.array([-1.3228756555322954, 0.0]), np.array([1.3228756555322954, 2.0]))
        cfg = ResidualConfig.from_lambda(0.9, box)
        for a_m in ([1.3228756555322954, 0.0], [-1.3228756555322954, 2.0], [1.3228756555322950, 1e-17],
                    [0.1, 0.3], [-1.1, 1.9999999999999998]):
            a_m = np.array(a_m)
            rb = residual_bounds(a_m, cfg, box)
            with self.subTest(a_m=a_m.tolist()):
                self.assertTrue(np.all(a_m + rb.lo >= box.a_low))
                self.assertTrue(np.all(a_m + rb.hi <= box.a_high))


class ResidualActionSpaceTest(SimpleTestCase):
    def setUp(self):
        self.box = ActionBox(np.array([-1.3, 0.0]), np.array([1.3, 2.0]))
        self.a_rp = np.array([0.4, -0.9])

    def test_full_space_ignores_reference(self):
        space = ResidualActionSpace(self.box, FULL)
        np.testing.assert_array_equal(space.final_action(np.array([1.0, 1.0]), self.a_rp),
                                      linear_map(self.a_rp, self.box))

    def test_wide_space_reaches_box(self):
        space = ResidualActionSpace(self.box, WIDE)
        action = space.final_action(np.array([1.0, 1.5]), np.array([0.999999, -0.999999]))
        np.testing.assert_allclose(action, [1.3, 0.0], atol=1e-5)

    def test_zero_lambda_executes_reference(self):
        space = ResidualActionSpace(self.box, RESIDUAL, ResidualConfig.from_lambda(0.0, self.box))
        a_m = np.array([0.7, 1.2])
        np.testing.assert_array_equal(space.final_action(a_m, self.a_rp), a_m)

    def test_residual_needs_config(self):
        with self.assertRaises(ContractViolation):
            ResidualActionSpace(self.box, RESIDUAL)
