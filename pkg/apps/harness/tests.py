"""
Tests for experiment configuration, metrics files, analysis tables, the
runner and the read-only API.
"""
import json
import math
import os
import tempfile
from dataclasses import replace
from io import StringIO
from pathlib import Path
from unittest import mock, skipUnless

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag
from django.urls import reverse
from rest_framework.test import APIClient

from apps.actionspace.mapping import FULL, RESIDUAL, WIDE
from apps.harness.analysis import (
    acceptance_report, compare_methods, early_stage_report, error_vs_baseline, lambda_sweep, write_table,
)
from apps.harness.config import (
    MBO_ACCURATE, MBO_REFERENCE, MODES, RM_SAC, RM_SAC_WIDE, SAC, ExperimentConfig, config_from_dict, load_config,
)
from apps.harness.metrics import (
    METRICS_COLUMNS, MetricsRow, MetricsWriter, daily_aggregates, final_window_means, read_metrics, window,
)
from apps.harness.models import ExperimentRun
from apps.harness.runner import (
    ExperimentResult, action_space_for, metrics_path_for, reference_provider, run_and_record, run_experiment,
    scenario_path_for,
)
from apps.refopt.cache import ReferenceActionCache
from apps.sac_agent.agent import AgentHyperParams
from apps.shared.exceptions import (
    ConfigurationError, ContractViolation, InsufficientDataError, MetricsAlignmentError, NumericalError,
)
from apps.scenario.profiles import device_boxes
from apps.gridflow.network import load_case

SMALL = AgentHyperParams(hidden=(16, 16), batch_size=8, buffer_size=64, random_steps=4)
SUMMARY = {'critic_loss': 0.5, 'train_reward': -2.0, 'test_reward': -1.5, 'train_minus_test': -0.5,
           'test_ploss': 0.1, 'test_violation': 0.0, 'alpha': 0.1, 'reference_action_norm': 1.0}


def rows_for(days, steps, test, train=None, critic=0.0, violation=0.0, ploss=0.1):
    train = test if train is None else train
    return [MetricsRow(d, s, train, test, ploss, violation, critic, 0.2, 1.0)
            for d in range(days) for s in range(steps)]


def frame_for(rows):
    return pd.DataFrame([[getattr(r, c) for c in METRICS_COLUMNS] for r in rows], columns=METRICS_COLUMNS)


def write_run(directory, cfg, rows):
    with MetricsWriter(metrics_path_for(cfg, directory), cfg.config_hash()) as writer:
        writer.write(rows)


class ExperimentConfigTest(SimpleTestCase):
    def test_network_defaults(self):
        cfg = ExperimentConfig()
        self.assertEqual((cfg.network, cfg.mode, cfg.lambda_scale, cfg.impedance_factor), ('case33', RM_SAC, 0.3, 1.5))
        self.assertEqual(ExperimentConfig(network='case69').lambda_scale, 0.5)
        self.assertEqual(ExperimentConfig(network='case118').impedance_factor, 1.3)
        self.assertIsNone(ExperimentConfig(mode=SAC).lambda_scale)

    def test_invalid_values(self):
        for kwargs in ({'mode': SAC, 'lambda_scale': 0.3}, {'lambda_scale': 1.2}, {'days': 0},
                       {'network': 'case14'}, {'mode': 'ddpg'}, {'impedance_factor': 0.0}):
            with self.subTest(kwargs=kwargs), self.assertRaises(ConfigurationError):
                ExperimentConfig(**kwargs)

    def test_hash_is_stable_and_ignores_output_dir(self):
        cfg = ExperimentConfig(days=3)
        self.assertEqual(len(cfg.config_hash()), 64)
        self.assertEqual(cfg.config_hash(), ExperimentConfig(days=3, output_dir='/tmp/x').config_hash())
        self.assertNotEqual(cfg.config_hash(), ExperimentConfig(days=3, seed=1).config_hash())
        self.assertNotEqual(cfg.config_hash(), ExperimentConfig(days=3, agent=SMALL).config_hash())

    def test_run_names(self):
        self.assertEqual(ExperimentConfig(seed=2).run_name, 'case33_rm_sac_l0.30_s2')
        self.assertEqual(ExperimentConfig(mode=MBO_ACCURATE).run_name, 'case33_mbo_accurate_s0')

    def test_variant_keeps_scenario(self):
        cfg = ExperimentConfig(days=7, seed=3, agent=SMALL)
        wide = cfg.variant(RM_SAC_WIDE)
        self.assertEqual((wide.days, wide.seed, wide.agent, wide.lambda_scale), (7, 3, SMALL, None))
        self.assertEqual(cfg.variant(RM_SAC, 0.8).lambda_scale, 0.8)

    def test_overrides(self):
        cfg = config_from_dict({'mode': SAC, 'days': 5, 'agent': {'hidden': [64, 64], 'gamma': 0.9}})
        self.assertEqual((cfg.mode, cfg.days, cfg.lambda_scale), (SAC, 5, None))
        self.assertEqual(cfg.agent.hidden, (64, 64))
        self.assertEqual(cfg.agent.gamma, 0.9)
        self.assertEqual(cfg.agent.batch_size, 128)

    def test_unknown_keys(self):
        with self.assertRaises(ConfigurationError):
            config_from_dict({'epochs': 3})
        with self.assertRaises(ConfigurationError):
            config_from_dict({'agent': {'learning_rate': 1e-3}})
        with self.assertRaises(ConfigurationError):
            config_from_dict({'agent': {'batch_size': 0}})

    def test_load_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cfg.json'
            path.write_text(json.dumps({'network': 'case69', 'seed': 4}))
            cfg = load_config(path)
            self.assertEqual((cfg.network, cfg.seed, cfg.lambda_scale), ('case69', 4, 0.5))
            path.write_text('{not json')
            with self.assertRaises(ConfigurationError):
                load_config(path)
            with self.assertRaises(ConfigurationError):
                load_config(Path(tmp) / 'missing.json')


class MetricsFileTest(SimpleTestCase):
    def test_round_trip_keeps_header_and_values(self):
        rows = [MetricsRow(0, 0, -0.1234567890123, float('nan'), 0.05, 0.0, float('nan'), float('nan'), 0.0),
                MetricsRow(0, 1, 1 / 3, -2.5, 0.07, 0.01, 0.25, 0.2, 1.5)]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.csv'
            with MetricsWriter(path, 'abc123') as writer:
                writer.write(rows)
                writer.write([])
            self.assertEqual(writer.rows_written, 2)
            frame, header = read_metrics(path)
        self.assertEqual(header, {'config_hash': 'abc123'})
        self.assertEqual(list(frame.columns), METRICS_COLUMNS)
        self.assertEqual(frame['train_reward'].tolist(), [-0.1234567890123, 1 / 3])
        self.assertTrue(math.isnan(frame['test_reward'][0]))

    def test_read_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ContractViolation):
                read_metrics(Path(tmp) / 'missing.csv')
            path = Path(tmp) / 'bad.csv'
            path.write_text('day,reward\n0,1\n')
            with self.assertRaises(ContractViolation):
                read_metrics(path)

    def test_daily_sums(self):
        frame = frame_for(rows_for(2, 4, test=-0.25, train=-0.5, critic=2.0, violation=0.125))
        daily = daily_aggregates(frame)
        self.assertEqual(daily['day'].tolist(), [0, 1])
        self.assertEqual(daily['steps'].tolist(), [4, 4])
        self.assertEqual(daily['test_reward'].tolist(), [-1.0, -1.0])
        self.assertEqual(daily['test_violation'].tolist(), [0.5, 0.5])
        self.assertEqual(daily['critic_loss'].tolist(), [2.0, 2.0])
        self.assertEqual(daily['train_minus_test'].tolist(), [-1.0, -1.0])

    def test_windows(self):
        daily = daily_aggregates(frame_for(rows_for(5, 2, test=-1.0)))
        self.assertEqual(window(daily, 2)['day'].tolist(), [3, 4])
        self.assertEqual(window(daily, 2, final=False)['day'].tolist(), [0, 1])
        with self.assertRaises(InsufficientDataError):
            window(daily, 6)
        self.assertEqual(final_window_means(daily)['test_reward'], -2.0)


class AnalysisTest(SimpleTestCase):
    def test_baseline_against_itself(self):
        frame = frame_for(rows_for(3, 2, test=-1.0, violation=0.1))
        errors, means = error_vs_baseline(frame, frame)
        self.assertEqual(errors['day'].tolist(), [0, 1, 2])
        self.assertTrue((errors.drop(columns=['day']) == 0.0).all().all())
        self.assertEqual(means['reward_error'], 0.0)

    def test_error_is_baseline_minus_method(self):
        method = frame_for(rows_for(2, 2, test=-1.5, ploss=0.25))
        baseline = frame_for(rows_for(2, 2, test=-1.0, ploss=0.125))
        errors, means = error_vs_baseline(method, baseline)
        self.assertEqual(errors['reward_error'].tolist(), [1.0, 1.0])
        self.assertEqual(means['ploss_error'], -0.25)

    def test_misaligned_inputs(self):
        with self.assertRaises(MetricsAlignmentError):
            error_vs_baseline(frame_for(rows_for(2, 2, test=-1.0)), frame_for(rows_for(3, 2, test=-1.0)))
        with self.assertRaises(MetricsAlignmentError):
            error_vs_baseline(frame_for(rows_for(2, 2, test=-1.0)), frame_for(rows_for(2, 3, test=-1.0)))

    def test_early_stage_table(self):
        table = early_stage_report({0.2: frame_for(rows_for(12, 2, test=-0.5))})
        self.assertEqual(table.to_dict(orient='records'), [{'lambda_scale': 0.2, 'early_test_reward': -1.0}])
        frame = frame_for(rows_for(12, 2, test=-0.75))
        twice = early_stage_report({0.2: frame, 0.4: frame})
        self.assertEqual(twice['early_test_reward'][0], twice['early_test_reward'][1])
        with self.assertRaises(InsufficientDataError):
            early_stage_report({0.2: frame_for(rows_for(5, 2, test=-1.0))})

    def test_lambda_sweep_table(self):
        calls = []

        def fake_runner(cfg):
            calls.append((cfg.mode, cfg.lambda_scale, cfg.seed))
            summary = dict(SUMMARY, test_reward=-cfg.lambda_scale - cfg.seed)
            return ExperimentResult(cfg, Path('unused.csv'), 0, summary)

        table = lambda_sweep(ExperimentConfig(mode=SAC), [0.0, 0.5, 1.0], seeds=[0, 2], runner=fake_runner)
        self.assertEqual(table['lambda_scale'].tolist(), [0.0, 0.5, 1.0])
        self.assertEqual(table['test_reward'].tolist(), [-1.0, -1.5, -2.0])
        self.assertEqual(table['seeds'].tolist(), [2, 2, 2])
        self.assertEqual(len(calls), 6)
        self.assertEqual(len(table.attrs['config_hashes']), 6)
        self.assertTrue(all(mode == RM_SAC for mode, _, _ in calls))
        with self.assertRaises(ConfigurationError):
            lambda_sweep(ExperimentConfig(), [1.5], runner=fake_runner)

    def test_compare_methods_runs_every_class(self):
        with tempfile.TemporaryDirectory() as tmp:
            def fake_runner(cfg):
                reward = -1.0 if cfg.mode == MBO_ACCURATE else -2.0
                write_run(tmp, cfg, rows_for(3, 2, test=reward))
                return ExperimentResult(cfg, metrics_path_for(cfg, tmp), 6, dict(SUMMARY, test_reward=2 * reward))

            table = compare_methods(ExperimentConfig(seed=1), runner=fake_runner)
        self.assertEqual(table['mode'].tolist(), list(MODES))
        self.assertEqual(table.set_index('mode')['reward_error'][MBO_ACCURATE], 0.0)
        self.assertEqual(table.set_index('mode')['reward_error'][SAC], 2.0)
        self.assertEqual(table.set_index('mode')['lambda_scale'][RM_SAC], 0.3)

    def test_acceptance_report_passes_on_expected_ordering(self):
        base = ExperimentConfig(mode=SAC)
        runs = {
            base.variant(MBO_ACCURATE): rows_for(12, 2, test=-1.0),
            base.variant(MBO_REFERENCE): rows_for(12, 2, test=-1.5),
            base.variant(SAC): rows_for(12, 2, test=-2.0),
            base.variant(RM_SAC_WIDE): rows_for(12, 2, test=-2.05),
            base.variant(RM_SAC, 0.3): rows_for(12, 2, test=-1.2),
            base.variant(RM_SAC, 0.2): rows_for(12, 2, test=-1.3, train=-1.4, critic=0.1),
            base.variant(RM_SAC, 0.4): rows_for(12, 2, test=-1.6, train=-1.8, critic=0.2),
            base.variant(RM_SAC, 0.8): rows_for(12, 2, test=-2.5, train=-2.9, critic=0.3),
        }
        with tempfile.TemporaryDirectory() as tmp:
            for cfg, rows in runs.items():
                write_run(tmp, cfg, rows)
            table = acceptance_report(tmp)
        self.assertEqual(table['criterion'].tolist(), list('abcdefg'))
        self.assertEqual(table['status'].tolist(), ['pass'] * 7)
        self.assertEqual(table.attrs['config_hashes'], sorted(cfg.config_hash() for cfg in runs))

    def test_written_table_names_its_runs(self):
        table = pd.DataFrame({'lambda_scale': [0.2, 0.4], 'test_reward': [-1.0, -1.25]})
        table.attrs['config_hashes'] = ['bbb', 'aaa']
        with tempfile.TemporaryDirectory() as tmp:
            path = write_table(table, Path(tmp) / 'tables' / 'sweep.csv')
            self.assertEqual(path.read_text().splitlines()[0], '# config_hash=aaa,bbb')
            self.assertEqual(pd.read_csv(path, comment='#').to_dict(orient='list'), table.to_dict(orient='list'))
            explicit = write_table(table, Path(tmp) / 'other.csv', config_hashes=['ccc'])
            self.assertEqual(explicit.read_text().splitlines()[0], '# config_hash=ccc')

    def test_acceptance_report_flags_missing_runs(self):
        with tempfile.TemporaryDirectory() as tmp:
            table = acceptance_report(tmp)
        self.assertEqual(set(table['status']), {'missing'})


class RunnerTest(SimpleTestCase):
    def test_action_space_per_mode(self):
        box = device_boxes(load_case('case33').devices)
        kinds = {mode: action_space_for(ExperimentConfig(mode=mode), box).kind for mode in MODES}
        self.assertEqual(kinds, {MBO_ACCURATE: WIDE, MBO_REFERENCE: WIDE, SAC: FULL,
                                 RM_SAC_WIDE: WIDE, RM_SAC: RESIDUAL})

    def test_plain_agent_has_no_reference(self):
        net = load_case('case33')
        self.assertIsNone(reference_provider(ExperimentConfig(mode=SAC), net, None))

    def test_one_row_per_step_and_reproducible(self):
        cfg = ExperimentConfig(mode=SAC, days=2, steps_per_day=4, agent=SMALL)
        with tempfile.TemporaryDirectory() as tmp:
            result = run_experiment(cfg, tmp, save_agent=False)
            first = result.metrics_path.read_bytes()
            frame, header = read_metrics(result.metrics_path)
            run_experiment(cfg, tmp, save_agent=False)
            second = result.metrics_path.read_bytes()
        self.assertEqual(result.steps, 8)
        self.assertEqual(len(frame), 8)
        self.assertEqual(header['config_hash'], cfg.config_hash())
        self.assertEqual(first, second)
        self.assertEqual(set(result.summary), set(SUMMARY))

    def test_zero_lambda_reproduces_reference_baseline(self):
        cfg = ExperimentConfig(mode=MBO_REFERENCE, days=1, steps_per_day=4, agent=SMALL)
        with tempfile.TemporaryDirectory() as tmp:
            cache = ReferenceActionCache(Path(tmp) / 'cache.csv')
            baseline = run_experiment(cfg, tmp, cache=cache)
            residual = run_experiment(cfg.variant(RM_SAC, 0.0), tmp, cache=cache, save_agent=False)
            self.assertGreaterEqual(cache.hits, 4)
            left, _ = read_metrics(residual.metrics_path)
            right, _ = read_metrics(baseline.metrics_path)
        columns = ['train_reward', 'test_reward', 'test_ploss', 'test_violation', 'reference_action_norm']
        pd.testing.assert_frame_equal(left[columns], right[columns])
        self.assertTrue(right['critic_loss'].isna().all())
        self.assertIsNone(baseline.checkpoint_path)

    def test_scenario_is_persisted_and_replayable(self):
        cfg = ExperimentConfig(mode=MBO_REFERENCE, days=1, steps_per_day=4, agent=SMALL)
        with tempfile.TemporaryDirectory() as tmp:
            first = run_experiment(cfg, Path(tmp) / 'generated')
            self.assertEqual(first.scenario_path, scenario_path_for(cfg, Path(tmp) / 'generated'))
            self.assertTrue(first.scenario_path.exists())
            self.assertIn(f"config_hash={cfg.config_hash()}", first.scenario_path.read_text().splitlines()[0])
            replay = run_experiment(replace(cfg, scenario_path=str(first.scenario_path)), Path(tmp) / 'replayed')
            self.assertEqual(replay.scenario_path, first.scenario_path)
            left, _ = read_metrics(first.metrics_path)
            right, _ = read_metrics(replay.metrics_path)
        columns = ['test_reward', 'test_ploss', 'test_violation', 'reference_action_norm']
        pd.testing.assert_frame_equal(left[columns], right[columns], check_exact=False, rtol=1e-6, atol=1e-8)

    def test_missing_scenario_file(self):
        cfg = ExperimentConfig(mode=SAC, days=1, steps_per_day=4, agent=SMALL, scenario_path='/nonexistent/s.csv')
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ConfigurationError):
                run_experiment(cfg, tmp)

    def test_short_scenario_file_rejected(self):
        cfg = ExperimentConfig(mode=MBO_REFERENCE, days=1, steps_per_day=4, agent=SMALL)
        with tempfile.TemporaryDirectory() as tmp:
            path = run_experiment(cfg, tmp).scenario_path
            with self.assertRaises(ConfigurationError):
                run_experiment(replace(cfg, days=2, scenario_path=str(path)), tmp)

    def test_clamp_events_are_reported(self):
        cfg = ExperimentConfig(mode=MBO_REFERENCE, days=1, steps_per_day=4, agent=SMALL)
        outside = device_boxes(load_case('case33').devices).a_high + 0.5
        with tempfile.TemporaryDirectory() as tmp, \
                mock.patch('apps.harness.runner.reference_provider', return_value=lambda day, step: outside.copy()):
            with self.assertLogs('apps.harness.runner', level='WARNING') as logs:
                result = run_experiment(cfg, tmp)
        self.assertGreaterEqual(result.clamp_events, 4)
        self.assertTrue(any('clamped' in line for line in logs.output))

    def test_in_box_reference_has_no_clamp_events(self):
        cfg = ExperimentConfig(mode=MBO_REFERENCE, days=1, steps_per_day=4, agent=SMALL)
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(run_experiment(cfg, tmp).clamp_events, 0)

    def test_failure_sends_alert(self):
        cfg = ExperimentConfig(mode=SAC, days=1, steps_per_day=4, agent=SMALL)
        with tempfile.TemporaryDirectory() as tmp, \
                mock.patch('apps.harness.runner.train_day_loop', side_effect=NumericalError('boom')), \
                mock.patch('apps.harness.runner.alert_to_telegram') as alert:
            with self.assertRaises(NumericalError):
                run_experiment(cfg, tmp)
        alert.assert_called_once()
        self.assertIn(cfg.run_name, alert.call_args.kwargs['message'])

    @tag('acceptance')
    @skipUnless(os.environ.get('VVC_RUN_ACCEPTANCE'), 'long ordering reproduction')
    def test_ordering_reproduction(self):
        base = ExperimentConfig(days=100)
        with tempfile.TemporaryDirectory() as tmp:
            cache = ReferenceActionCache(Path(tmp) / 'cache.csv')

            def runner(cfg):
                return run_experiment(cfg, tmp, cache=cache, save_agent=False)

            compare_methods(base, runner=runner)
            lambda_sweep(base, [0.2, 0.4, 0.8], runner=runner)
            table = acceptance_report(tmp)
        self.assertEqual(table['status'].tolist(), ['pass'] * 7, table.to_string())


class RecordedRunTest(TestCase):
    def fake_result(self, cfg, path):
        return ExperimentResult(cfg, Path(path), 8, dict(SUMMARY, critic_loss=float('nan')), clamp_events=3)

    def test_completed_run_is_recorded(self):
        cfg = ExperimentConfig(mode=SAC, days=2)
        with mock.patch('apps.harness.runner.run_experiment', return_value=self.fake_result(cfg, '/tmp/run.csv')):
            run_and_record(cfg, '/tmp')
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.COMPLETED)
        self.assertEqual((run.name, run.steps, run.final_test_reward), (cfg.run_name, 8, -1.5))
        self.assertIsNone(run.final_critic_loss)
        self.assertEqual(run.config_hash, cfg.config_hash())
        self.assertEqual(run.config['agent']['hidden'], [512, 512])
        self.assertEqual(run.clamp_events, 3)

    def test_failed_run_is_recorded(self):
        cfg = ExperimentConfig(days=2)
        with mock.patch('apps.harness.runner.run_experiment', side_effect=NumericalError('nan critic loss')):
            with self.assertRaises(NumericalError):
                run_and_record(cfg, '/tmp')
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.Status.FAILED)
        self.assertIn('nan critic loss', run.error_message)


class ExperimentApiTest(TestCase):
    def setUp(self):
        self.client = APIClient()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        cfg = ExperimentConfig(mode=SAC, days=2)
        write_run(self.tmp.name, cfg, rows_for(2, 3, test=-0.5))
        self.sac = ExperimentRun.start(cfg, metrics_path_for(cfg, self.tmp.name))
        self.rm = ExperimentRun.start(ExperimentConfig(days=2, seed=1), Path(self.tmp.name) / 'missing.csv')

    def test_list_and_filter(self):
        response = self.client.get(reverse('harness:run-list'))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.data['count'], 2)
        response = self.client.get(reverse('harness:run-list'), {'mode': SAC})
        self.assertEqual([r['name'] for r in response.data['results']], [self.sac.name])
        response = self.client.get(reverse('harness:run-list'), {'ordering': 'lambda_scale', 'seed': 1})
        self.assertEqual(response.data['results'][0]['lambda_scale'], 0.3)

    def test_detail_envelope(self):
        response = self.client.get(reverse('harness:run-detail', args=[self.sac.pk]))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.data['id'], 'SUCCESS')
        self.assertEqual(response.data['data']['config_hash'], self.sac.config_hash)
        self.assertEqual(response.data['data']['clamp_events'], 0)
        response = self.client.get(reverse('harness:run-detail', args=[9999]))
        self.assertEqual(response.status_code, 404)
        self.assertEqual(response.data['id'], 'NOT_FOUND')

    def test_daily_aggregates(self):
        response = self.client.get(reverse('harness:run-daily', args=[self.sac.pk]))
        self.assertEqual(response.status_code, 200)
        days = response.data['data']['days']
        self.assertEqual([d['test_reward'] for d in days], [-1.5, -1.5])
        self.assertEqual(days[0]['steps'], 3)
        response = self.client.get(reverse('harness:run-daily', args=[self.rm.pk]))
        self.assertEqual(response.status_code, 404)

    def test_catalog_and_health(self):
        response = self.client.get(reverse('catalog'))
        self.assertEqual(response.data['data']['modes'], list(MODES))
        self.assertEqual(self.client.get('/health/').json()['status'], 'ok')


class CommandTest(TestCase):
    def test_report_writes_table(self):
        out = StringIO()
        with tempfile.TemporaryDirectory() as tmp:
            call_command('report', out=tmp, stdout=out)
            path = Path(tmp) / 'acceptance_case33_s0.csv'
            self.assertTrue(path.read_text().startswith('# config_hash='))
            table = pd.read_csv(path, comment='#')
        self.assertEqual(len(table), 7)
        self.assertIn('(a)', out.getvalue())

    def test_run_rejects_lambda_for_plain_agent(self):
        with self.assertRaises(CommandError):
            call_command('run', mode=SAC, lambda_scale=0.3, stdout=StringIO())

    def test_run_replicates_over_seeds(self):
        def fake(cfg, cache=None):
            return ExperimentResult(cfg, Path('/tmp') / f"{cfg.run_name}.csv", 8, SUMMARY)

        out = StringIO()
        with mock.patch('apps.harness.management.commands.run.run_and_record', side_effect=fake) as run:
            call_command('run', mode=SAC, days=2, seeds=[0, 1], stdout=out)
        self.assertEqual([c.args[0].seed for c in run.call_args_list], [0, 1])
        self.assertIn('case33_sac_s1', out.getvalue())

    def test_run_passes_scenario_file(self):
        def fake(cfg, cache=None):
            return ExperimentResult(cfg, Path('/tmp') / f"{cfg.run_name}.csv", 8, SUMMARY)

        with mock.patch('apps.harness.management.commands.run.run_and_record', side_effect=fake) as run:
            call_command('run', mode=SAC, days=2, scenario_path='/data/scenario.csv', stdout=StringIO())
        self.assertEqual(run.call_args.args[0].scenario_path, '/data/scenario.csv')
