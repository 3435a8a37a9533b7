"""
Management command to run one experiment class.
"""
from dataclasses import replace

from django.core.management.base import BaseCommand, CommandError

from apps.harness.cli import add_experiment_arguments, cache_from_options, config_from_options, seeds_from_options
from apps.harness.runner import run_and_record
from apps.shared.exceptions import VoltVarLabError


class Command(BaseCommand):
    help = 'Runs one experiment and writes its metrics CSV'

    def add_arguments(self, parser):
        add_experiment_arguments(parser)

    def handle(self, *args, **options):
        cfg = config_from_options(options)
        cache = cache_from_options(cfg, options)
        for seed in seeds_from_options(cfg, options):
            try:
                result = run_and_record(replace(cfg, seed=seed), cache=cache)
            except VoltVarLabError as exc:
                raise CommandError(str(exc)) from exc
            self.stdout.write(
                self.style.SUCCESS(f'{result.config.run_name}: {result.steps} steps, '
                                   f'final test reward {result.summary["test_reward"]:.4f} -> {result.metrics_path}')
            )
