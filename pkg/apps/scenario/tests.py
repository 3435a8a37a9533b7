"""
Tests for device capability ranges and scenario generation.
"""
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.gridflow.network import load_case
from apps.scenario.devices import IBER, SVC, DeviceSpec, device_limits, iber_q_range
from apps.scenario.profiles import (
    device_boxes, exogenous_injections, generate_profiles, load_curve, pv_curve,
)
from apps.scenario.storage import read_scenario_csv, write_scenario_csv
from apps.shared.exceptions import ContractViolation


class IberRangeTest(SimpleTestCase):
    def test_rated_device(self):
        low, high = iber_q_range(DeviceSpec(IBER, bus=2, s_mva=2.0, p_max=1.5))
        self.assertAlmostEqual(high, math.sqrt(1.75))
        self.assertAlmostEqual(high, 1.3229, places=4)
        self.assertEqual(low, -high)

    def test_no_headroom(self):
        self.assertEqual(iber_q_range(DeviceSpec(IBER, bus=2, s_mva=1.5, p_max=1.5)), (-0.0, 0.0))

    def test_full_capacity(self):
        self.assertEqual(iber_q_range(DeviceSpec(IBER, bus=2, s_mva=2.0, p_max=0.0)), (-2.0, 2.0))

    def test_s_below_p_max_rejected(self):
        with self.assertRaises(ContractViolation):
            DeviceSpec(IBER, bus=2, s_mva=1.0, p_max=1.5)

    def test_svc_rejected(self):
        with self.assertRaises(ContractViolation):
            iber_q_range(DeviceSpec(SVC, bus=2, q_min=0.0, q_max=2.0))

    def test_inverted_svc_rejected(self):
        with self.assertRaises(ContractViolation):
            DeviceSpec(SVC, bus=2, q_min=1.0, q_max=0.0)

    def test_case33_limits(self):
        low, high = device_limits(load_case('case33').devices)
        np.testing.assert_allclose(low, [-math.sqrt(1.75)] * 3 + [0.0])
        np.testing.assert_allclose(high, [math.sqrt(1.75)] * 3 + [2.0])
        box = device_boxes(load_case('case33').devices)
        self.assertEqual(box.dim, 4)


class ProfileGenerationTest(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.net = load_case('case33')

    def test_curves(self):
        load = load_curve()
        pv = pv_curve()
        self.assertEqual(int(np.argmax(load)), 76)
        self.assertAlmostEqual(load.max(), 1.0)
        self.assertGreaterEqual(load.min(), 0.6 - 1e-12)
        self.assertEqual(int(np.argmax(pv)), 48)
        self.assertEqual(pv[:25].max(), 0.0)
        self.assertLess(pv[72], 1e-12)
        self.assertEqual(pv[73:].max(), 0.0)

    def test_same_seed_is_bitwise_identical(self):
        first = generate_profiles(self.net, self.net.devices, days=3, seed=11)
        second = generate_profiles(self.net, self.net.devices, days=3, seed=11)
        np.testing.assert_array_equal(first.load_scale, second.load_scale)
        np.testing.assert_array_equal(first.pv_output, second.pv_output)

    def test_day_independent_of_run_length(self):
        short = generate_profiles(self.net, self.net.devices, days=1, seed=0)
        long = generate_profiles(self.net, self.net.devices, days=2, seed=0)
        np.testing.assert_array_equal(short.load_scale[0], long.load_scale[0])
        np.testing.assert_array_equal(short.pv_output[0], long.pv_output[0])
        for step in (0, 48, 95):
            first = exogenous_injections(self.net, short, 0, step)
            second = exogenous_injections(self.net, long, 0, step)
            np.testing.assert_array_equal(first.p, second.p)
            np.testing.assert_array_equal(first.q, second.q)

    def test_days_differ_from_each_other(self):
        scenario = generate_profiles(self.net, self.net.devices, days=2, seed=0)
        self.assertFalse(np.array_equal(scenario.load_scale[0], scenario.load_scale[1]))

    def test_day_digest_tracks_inputs(self):
        short = generate_profiles(self.net, self.net.devices, days=1, seed=0)
        long = generate_profiles(self.net, self.net.devices, days=2, seed=0)
        noisier = generate_profiles(self.net, self.net.devices, days=1, seed=0, noise_amplitude=0.2)
        self.assertEqual(short.day_digest(0), long.day_digest(0))
        self.assertEqual(len(short.day_digest(0)), 16)
        self.assertNotEqual(long.day_digest(0), long.day_digest(1))
        self.assertNotEqual(short.day_digest(0), noisier.day_digest(0))

    def test_different_seed_differs(self):
        first = generate_profiles(self.net, self.net.devices, days=1, seed=1)
        second = generate_profiles(self.net, self.net.devices, days=1, seed=2)
        self.assertFalse(np.array_equal(first.load_scale, second.load_scale))

    def test_shapes(self):
        scenario = generate_profiles(self.net, self.net.devices, days=2, seed=0)
        self.assertEqual(scenario.load_scale.shape, (2, 96, 33))
        self.assertEqual(scenario.pv_output.shape, (2, 96, 4))
        self.assertEqual(scenario.total_steps, 192)

    def test_noise_bounds(self):
        scenario = generate_profiles(self.net, self.net.devices, days=5, seed=3)
        curve = load_curve()[None, :, None]
        ratio = scenario.load_scale / curve
        self.assertTrue(np.all(ratio >= 0.8 - 1e-12))
        self.assertTrue(np.all(ratio <= 1.2 + 1e-12))
        self.assertTrue(np.all(scenario.load_scale > 0))

    def test_pv_within_capability(self):
        scenario = generate_profiles(self.net, self.net.devices, days=5, seed=3)
        p_max = np.array([spec.p_max for spec in self.net.devices])
        self.assertTrue(np.all(scenario.pv_output >= 0.0))
        self.assertTrue(np.all(scenario.pv_output <= p_max))
        np.testing.assert_array_equal(scenario.pv_output[:, :, 3], 0.0)

    def test_mean_multiplier(self):
        # 96 steps x 33 buses x 32 days > 1e5 samples per curve value set
        scenario = generate_profiles(self.net, self.net.devices, days=32, seed=5)
        ratio = scenario.load_scale / load_curve()[None, :, None]
        self.assertGreater(ratio.size, 100_000)
        self.assertLess(abs(ratio.mean() - 1.0), 0.01)

    def test_invalid_days(self):
        with self.assertRaises(ContractViolation):
            generate_profiles(self.net, self.net.devices, days=0, seed=0)

    def test_unknown_bus(self):
        with self.assertRaises(ContractViolation):
            generate_profiles(self.net, [DeviceSpec(SVC, bus=99, q_max=1.0)], days=1, seed=0)

    def test_exogenous_injections(self):
        scenario = generate_profiles(self.net, self.net.devices, days=1, seed=0)
        inj = exogenous_injections(self.net, scenario, day=0, step=48)
        scale = scenario.load_scale[0, 48]
        bus18 = self.net.bus_index[18]
        self.assertAlmostEqual(inj.p[bus18], -self.net.load_p[bus18] * scale[bus18]
                               + scenario.pv_output[0, 48, 0])
        np.testing.assert_allclose(inj.q, -self.net.load_q * scale)
        with self.assertRaises(ContractViolation):
            exogenous_injections(self.net, scenario, day=1, step=0)


class ScenarioStorageTest(SimpleTestCase):
    def test_csv_round_trip(self):
        net = load_case('case33')
        scenario = generate_profiles(net, net.devices, days=2, seed=9, steps_per_day=8)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_scenario_csv(scenario, net, Path(tmp) / 'scenario.csv')
            loaded = read_scenario_csv(path, net)
        self.assertEqual(loaded.seed, 9)
        self.assertEqual(loaded.steps_per_day, 8)
        self.assertEqual(loaded.days, 2)
        for day in range(2):
            for step in range(8):
                original = exogenous_injections(net, scenario, day, step)
                restored = exogenous_injections(net, loaded, day, step)
                np.testing.assert_allclose(restored.p, original.p, rtol=1e-12, atol=1e-15)
                np.testing.assert_allclose(restored.q, original.q, rtol=1e-12, atol=1e-15)
