"""
Management command to evaluate the ordering checks on finished runs.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.harness.analysis import acceptance_report, write_table
from apps.harness.config import BEST_LAMBDA
from apps.shared.exceptions import VoltVarLabError


class Command(BaseCommand):
    help = 'Checks the expected method ordering on a directory of metrics files'

    def add_arguments(self, parser):
        parser.add_argument('--network', choices=sorted(BEST_LAMBDA), default='case33')
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--lambda', dest='best_lambda', type=float)
        parser.add_argument('--out', help='Directory holding the metrics files (default VVC_OUTPUT_DIR)')

    def handle(self, *args, **options):
        directory = Path(options.get('out') or settings.VVC_OUTPUT_DIR)
        seed = settings.VVC_DEFAULT_SEED if options.get('seed') is None else options['seed']
        try:
            table = acceptance_report(directory, options['network'], seed, options.get('best_lambda'))
        except VoltVarLabError as exc:
            raise CommandError(str(exc)) from exc
        path = write_table(table, directory / f"acceptance_{options['network']}_s{seed}.csv")
        for row in table.itertuples(index=False):
            style = {'pass': self.style.SUCCESS, 'fail': self.style.ERROR}.get(row.status, self.style.WARNING)
            self.stdout.write(style(f'({row.criterion}) {row.description}: {row.status} {row.value}'))
        self.stdout.write(f'Report written to {path}')
