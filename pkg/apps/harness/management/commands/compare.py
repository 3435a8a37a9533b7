"""
Management command to compare all experiment classes against mbo_accurate.
"""
from dataclasses import replace

from django.core.management.base import BaseCommand, CommandError

from apps.harness.analysis import compare_methods, write_table
from apps.harness.cli import add_experiment_arguments, cache_from_options, config_from_options, seeds_from_options
from apps.harness.runner import output_dir_for, run_and_record
from apps.shared.exceptions import VoltVarLabError


class Command(BaseCommand):
    help = 'Runs the five experiment classes on one scenario and writes the error-vs-baseline table'

    def add_arguments(self, parser):
        add_experiment_arguments(parser, mode=False)
        parser.add_argument('--lambda', dest='best_lambda', type=float, help='Residual scale used for rm_sac')

    def handle(self, *args, **options):
        cfg = config_from_options(options)
        cache = cache_from_options(cfg, options)
        for seed in seeds_from_options(cfg, options):
            seeded = replace(cfg, seed=seed)
            try:
                table = compare_methods(seeded, runner=lambda run_cfg: run_and_record(run_cfg, cache=cache),
                                        best_lambda=options.get('best_lambda'))
            except VoltVarLabError as exc:
                raise CommandError(str(exc)) from exc
            path = write_table(table, output_dir_for(seeded) / f"compare_{seeded.network}_s{seed}.csv")
            self.stdout.write(self.style.SUCCESS(f'Comparison for seed {seed} written to {path}'))
