"""
Options shared by the harness management commands.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from apps.gridflow.network import CASE_NAMES
from apps.harness.config import MODES, ExperimentConfig, config_from_dict, read_config_file
from apps.harness.runner import reference_cache_for
from apps.shared.exceptions import VoltVarLabError


def add_experiment_arguments(parser, mode: bool = True):
    parser.add_argument('--network', choices=CASE_NAMES, help='Feeder case (default case33)')
    if mode:
        parser.add_argument('--mode', choices=MODES, help='Experiment class (default rm_sac)')
        parser.add_argument('--lambda', dest='lambda_scale', type=float, help='Residual scale, rm_sac only')
    parser.add_argument('--days', type=int, help='Simulated days (default VVC_DEFAULT_DAYS)')
    parser.add_argument('--seed', type=int, help='Scenario and agent seed (default VVC_DEFAULT_SEED)')
    parser.add_argument('--seeds', type=int, nargs='+', help='Replicate over several seeds')
    parser.add_argument('--impedance-factor', dest='impedance_factor', type=float,
                        help='Reference-model impedance multiplier')
    parser.add_argument('--scenario', dest='scenario_path',
                        help='Scenario CSV to replay instead of generating one from the seed')
    parser.add_argument('--out', help='Output directory (default VVC_OUTPUT_DIR)')
    parser.add_argument('--config', help='JSON file overriding configuration and agent fields')
    parser.add_argument('--cache-refactions', dest='cache_reference', action='store_true',
                        help='Reuse reference actions from the CSV cache in VVC_CACHE_DIR')


def config_from_options(options) -> ExperimentConfig:
    """Defaults, then the --config file, then explicit flags."""
    try:
        base = ExperimentConfig(days=settings.VVC_DEFAULT_DAYS, seed=settings.VVC_DEFAULT_SEED)
        data = read_config_file(options['config']) if options.get('config') else {}
        if not isinstance(data, dict):
            raise CommandError("Configuration file must hold a JSON object")
        keys = ('network', 'mode', 'lambda_scale', 'days', 'seed', 'impedance_factor', 'scenario_path')
        data.update({key: options[key] for key in keys if options.get(key) is not None})
        if options.get('out'):
            data['output_dir'] = str(Path(options['out']))
        return config_from_dict(data, base)
    except VoltVarLabError as exc:
        raise CommandError(str(exc)) from exc


def seeds_from_options(cfg: ExperimentConfig, options):
    return options.get('seeds') or [cfg.seed]


def cache_from_options(cfg: ExperimentConfig, options):
    return reference_cache_for(cfg) if options.get('cache_reference') else None
