"""
Management command to sweep the residual scale of rm_sac.
"""
from django.core.management.base import BaseCommand, CommandError

from apps.harness.analysis import lambda_sweep, write_table
from apps.harness.cli import add_experiment_arguments, cache_from_options, config_from_options, seeds_from_options
from apps.harness.config import SWEEP_LAMBDAS
from apps.harness.runner import output_dir_for, run_and_record
from apps.shared.exceptions import VoltVarLabError


class Command(BaseCommand):
    help = 'Runs rm_sac for every lambda and writes the final-window summary table'

    def add_arguments(self, parser):
        add_experiment_arguments(parser, mode=False)
        parser.add_argument('--lambdas', type=float, nargs='+', default=list(SWEEP_LAMBDAS),
                            help='Residual scales to run (default 0.0 to 1.0 in steps of 0.1)')

    def handle(self, *args, **options):
        cfg = config_from_options(options)
        cache = cache_from_options(cfg, options)
        try:
            table = lambda_sweep(cfg, options['lambdas'], seeds_from_options(cfg, options),
                                 runner=lambda run_cfg: run_and_record(run_cfg, cache=cache))
        except VoltVarLabError as exc:
            raise CommandError(str(exc)) from exc
        path = write_table(table, output_dir_for(cfg) / f"sweep_{cfg.network}.csv")
        self.stdout.write(self.style.SUCCESS(f'Sweep over {len(table)} lambdas written to {path}'))
