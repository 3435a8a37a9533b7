"""
Tests for the network model and the power-flow solvers.
"""
import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.gridflow.network import (
    Branch, Bus, Injections, Network, load_case, load_network, network_from_dict, scale_impedances,
)
from apps.gridflow.newton import solve_newton_raphson
from apps.gridflow.sweep import branch_losses, solve_power_flow, solve_power_flow_batch, total_loss
from apps.shared.exceptions import ContractViolation, NetworkDataError, PowerFlowError


def two_bus(load_p=1.0, load_q=0.5, r=1.0, x=2.0):
    return Network(
        buses=(Bus(1, 0.0, 0.0), Bus(2, load_p, load_q)),
        branches=(Branch(1, 2, r, x),),
        slack_bus=1,
        base_mva=10.0,
        base_kv=12.66,
        name='two_bus',
    )


def base_injections(net):
    return Injections(-net.load_p, -net.load_q)


def two_bus_case_dict():
    return {
        'base_mva': 10.0,
        'base_kv': 12.66,
        'slack_bus': 1,
        'buses': [
            {'id': 1, 'load_p_mw': 0.0, 'load_q_mvar': 0.0},
            {'id': 2, 'load_p_mw': 0.5, 'load_q_mvar': 0.2},
        ],
        'branches': [{'from': 1, 'to': 2, 'r_ohm': 0.5, 'x_ohm': 0.4}],
        'devices': [],
    }


class NetworkLoadingTest(SimpleTestCase):
    def test_case33_shape(self):
        net = load_case('case33')
        self.assertEqual(net.n_bus, 33)
        self.assertEqual(net.n_branch, 32)
        self.assertEqual([spec.bus for spec in net.devices], [18, 22, 25, 33])

    def test_case69_shape(self):
        net = load_case('case69')
        self.assertEqual(net.n_bus, 69)
        self.assertEqual(net.n_branch, 68)
        self.assertEqual(len(net.devices), 5)

    def test_case118_shape(self):
        net = load_case('case118')
        self.assertEqual(net.n_bus, 118)
        self.assertEqual(net.n_branch, 117)
        self.assertEqual([spec.bus for spec in net.devices], [34, 51, 54, 69, 75, 98, 108, 112, 45, 105])
        self.assertEqual([spec.kind for spec in net.devices].count('svc'), 2)
        self.assertAlmostEqual(float(net.load_p.sum()), 22.7097, delta=1e-6)

    def test_minimal_two_bus_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'tiny.json'
            path.write_text(json.dumps(two_bus_case_dict()))
            net = load_network(path)
        self.assertEqual(net.n_bus, 2)
        self.assertEqual(net.name, 'tiny')

    def test_loop_is_rejected(self):
        data = json.loads((Path(__file__).parent / 'cases' / 'case33.json').read_text())
        data['branches'].append({'from': 8, 'to': 21, 'r_ohm': 2.0, 'x_ohm': 2.0})
        with self.assertRaises(NetworkDataError):
            network_from_dict(data)

    def test_duplicate_bus_ids(self):
        data = two_bus_case_dict()
        data['buses'][1]['id'] = 1
        with self.assertRaises(NetworkDataError):
            network_from_dict(data)

    def test_missing_slack(self):
        data = two_bus_case_dict()
        data['slack_bus'] = 7
        with self.assertRaises(NetworkDataError):
            network_from_dict(data)

    def test_unknown_field_rejected(self):
        data = two_bus_case_dict()
        data['buses'][0]['vmax'] = 1.05
        with self.assertRaises(NetworkDataError):
            network_from_dict(data)

    def test_zero_impedance_branch_rejected(self):
        with self.assertRaises(NetworkDataError):
            Network(
                buses=(Bus(1, 0.0, 0.0), Bus(2, 0.0, 0.0), Bus(3, 0.5, 0.2)),
                branches=(Branch(1, 2, 0.0, 0.0), Branch(2, 3, 0.5, 0.4)),
                slack_bus=1,
            )
        data = two_bus_case_dict()
        data['branches'][0].update(r_ohm=0.0, x_ohm=0.0)
        with self.assertRaises(NetworkDataError):
            network_from_dict(data)

    def test_purely_reactive_branch_solves(self):
        net = two_bus(r=0.0, x=2.0)
        sol = solve_power_flow(net, base_injections(net))
        self.assertTrue(sol.converged)
        self.assertAlmostEqual(total_loss(sol), 0.0, places=9)

    def test_missing_file(self):
        with self.assertRaises(NetworkDataError):
            load_network('/nonexistent/case.json')


class ScaleImpedancesTest(SimpleTestCase):
    def setUp(self):
        self.net = load_case('case33')

    def test_identity_factor(self):
        scaled = scale_impedances(self.net, 1.0)
        self.assertEqual(scaled.branches, self.net.branches)

    def test_factor_one_and_a_half(self):
        scaled = scale_impedances(self.net, 1.5)
        for original, new in zip(self.net.branches, scaled.branches):
            self.assertEqual(new.r, original.r * 1.5)
            self.assertEqual(new.x, original.x * 1.5)
            self.assertEqual((new.from_bus, new.to_bus), (original.from_bus, original.to_bus))
        self.assertEqual(scaled.buses, self.net.buses)

    def test_case118_factor_one_point_three(self):
        net = load_case('case118')
        scaled = scale_impedances(net, 1.3)
        for original, new in zip(net.branches, scaled.branches):
            self.assertEqual(new.r, original.r * 1.3)
            self.assertEqual(new.x, original.x * 1.3)
        base = solve_power_flow(scaled, base_injections(scaled))
        self.assertTrue(base.converged)
        self.assertLess(base.v.min(), solve_power_flow(net, base_injections(net)).v.min())

    def test_non_positive_factor(self):
        with self.assertRaises(ContractViolation):
            scale_impedances(self.net, 0.0)


class SweepTest(SimpleTestCase):
    def setUp(self):
        self.net = load_case('case33')

    def test_no_flow_case(self):
        solution = solve_power_flow(self.net, Injections.zeros(self.net.n_bus))
        np.testing.assert_array_equal(solution.v, np.ones(self.net.n_bus))
        self.assertEqual(total_loss(solution), 0.0)

    def test_base_case_matches_newton_raphson(self):
        injections = base_injections(self.net)
        sweep = solve_power_flow(self.net, injections)
        oracle = solve_newton_raphson(self.net, injections)
        np.testing.assert_allclose(sweep.v, oracle.v, atol=1e-6)
        self.assertAlmostEqual(total_loss(sweep), oracle.loss, delta=1e-6)
        # Well-known figures of this feeder: about 203 kW loss, 0.913 p.u. minimum voltage.
        self.assertAlmostEqual(total_loss(sweep), 0.2027, delta=2e-3)
        self.assertAlmostEqual(sweep.v.min(), 0.9131, delta=2e-3)

    def test_slack_voltage_fixed(self):
        solution = solve_power_flow(self.net, base_injections(self.net))
        self.assertEqual(solution.v[self.net.slack_index], 1.0)

    def test_random_injections_match_oracle(self):
        rng = np.random.default_rng(7)
        n = self.net.n_bus
        devices = self.net.device_index
        count = 1000
        scale = rng.uniform(0.2, 1.6, size=(count, n))
        p = -self.net.load_p * scale
        q = -self.net.load_q * scale
        p[:, devices] += rng.uniform(0.0, 1.5, size=(count, len(devices)))
        q[:, devices] += rng.uniform(-1.3, 1.3, size=(count, len(devices)))
        batch = solve_power_flow_batch(self.net, p, q)
        self.assertTrue(batch.converged.all())
        for i in range(count):
            oracle = solve_newton_raphson(self.net, Injections(p[i], q[i]))
            np.testing.assert_allclose(batch.v[i], oracle.v, atol=1e-6)
            row = batch.row(i)
            self.assertLess(abs(total_loss(row) - branch_losses(self.net, row).sum()), 1e-6)

    def test_two_bus_closed_form(self):
        net = two_bus(load_p=2.0, load_q=1.0, r=1.5, x=1.0)
        solution = solve_power_flow(net, base_injections(net))
        p, q = 2.0 / net.base_mva, 1.0 / net.base_mva
        r, x = 1.5 / net.z_base, 1.0 / net.z_base
        b = 2 * (p * r + q * x) - 1.0
        v2_squared = (-b + math.sqrt(b * b - 4 * (p * p + q * q) * (r * r + x * x))) / 2
        expected_loss = r * (p * p + q * q) / v2_squared * net.base_mva
        self.assertAlmostEqual(solution.v[1], math.sqrt(v2_squared), delta=1e-8)
        self.assertAlmostEqual(total_loss(solution), expected_loss, delta=1e-8)
        self.assertAlmostEqual(branch_losses(net, solution).sum(), expected_loss, delta=1e-8)

    def test_doubling_load_increases_loss(self):
        base = two_bus(load_p=1.0, load_q=0.5)
        doubled = two_bus(load_p=2.0, load_q=1.0)
        base_loss = total_loss(solve_power_flow(base, base_injections(base)))
        doubled_loss = total_loss(solve_power_flow(doubled, base_injections(doubled)))
        self.assertGreater(doubled_loss, base_loss)

    def test_energy_balance_case69(self):
        net = load_case('case69')
        solution = solve_power_flow(net, base_injections(net))
        self.assertLess(abs(total_loss(solution) - branch_losses(net, solution).sum()), 1e-6)
        self.assertGreaterEqual(total_loss(solution), 0.0)

    def test_collapse_raises(self):
        net = two_bus(load_p=400.0, load_q=300.0, r=5.0, x=5.0)
        with self.assertRaises(PowerFlowError) as ctx:
            solve_power_flow(net, base_injections(net))
        self.assertGreater(ctx.exception.iterations, 0)

    def test_failed_solution_can_be_inspected(self):
        net = two_bus(load_p=400.0, load_q=300.0, r=5.0, x=5.0)
        solution = solve_power_flow(net, base_injections(net), raise_on_failure=False)
        self.assertFalse(solution.converged)
        with self.assertRaises(ContractViolation):
            total_loss(solution)

    def test_shape_mismatch(self):
        with self.assertRaises(ContractViolation):
            solve_power_flow(self.net, Injections.zeros(5))
