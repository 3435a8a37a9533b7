"""
CSV persistence for scenarios.
"""
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from apps.gridflow.network import Network
from apps.scenario.profiles import NOISE_AMPLITUDE, ScenarioSet
from apps.shared.exceptions import ContractViolation

logger = logging.getLogger(__name__)

COLUMNS = ['day', 'step', 'bus_or_device_id', 'kind', 'value_mw_or_mvar']


def _frame(days, steps, ids, kind, values) -> pd.DataFrame:
    day, step, ident = np.meshgrid(np.arange(days), np.arange(steps), ids, indexing='ij')
    return pd.DataFrame({
        'day': day.ravel(),
        'step': step.ravel(),
        'bus_or_device_id': ident.ravel(),
        'kind': kind,
        'value_mw_or_mvar': values.ravel(),
    })


def write_scenario_csv(scenario: ScenarioSet, net: Network, path: Union[str, Path],
                       config_hash: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    bus_ids = np.array([bus.id for bus in net.buses])
    frames = [
        _frame(scenario.days, scenario.steps_per_day, bus_ids, 'load_p', scenario.load_scale * net.load_p),
        _frame(scenario.days, scenario.steps_per_day, bus_ids, 'load_q', scenario.load_scale * net.load_q),
        _frame(scenario.days, scenario.steps_per_day, np.arange(len(net.devices)), 'pv_p', scenario.pv_output),
    ]
    table = pd.concat(frames, ignore_index=True)[COLUMNS]
    with path.open('w', encoding='utf-8', newline='') as handle:
        header = (f"# seed={scenario.seed} steps_per_day={scenario.steps_per_day} "
                  f"noise_amplitude={scenario.noise_amplitude!r}")
        if config_hash:
            header += f" config_hash={config_hash}"
        handle.write(header + "\n")
        table.to_csv(handle, index=False, float_format='%.17g')
    logger.info(f"Wrote scenario ({scenario.days} days) to {path}")
    return path


def _read_header(path: Path) -> dict:
    with path.open(encoding='utf-8') as handle:
        first = handle.readline().strip()
    if not first.startswith('#'):
        return {}
    pairs = (token.split('=', 1) for token in first[1:].split() if '=' in token)
    return {key: value for key, value in pairs}


def _kind_values(table: pd.DataFrame, kind: str, days: int, steps: int, width: int):
    rows = table[table['kind'] == kind].sort_values(['day', 'step', 'bus_or_device_id'])
    ids = rows['bus_or_device_id'].to_numpy()[:width].astype(int)
    values = rows['value_mw_or_mvar'].to_numpy(dtype=float)
    if values.size != days * steps * width:
        raise ContractViolation("Scenario CSV is incomplete", kind=kind, rows=int(values.size))
    return ids, values.reshape(days, steps, width)


def read_scenario_csv(path: Union[str, Path], net: Network) -> ScenarioSet:
    """Rebuild a scenario; buses without base load keep a unit multiplier."""
    path = Path(path)
    header = _read_header(path)
    table = pd.read_csv(path, comment='#')
    if list(table.columns) != COLUMNS:
        raise ContractViolation("Scenario CSV has unexpected columns", columns=list(table.columns))
    days = int(table['day'].max()) + 1
    steps = int(header.get('steps_per_day', table['step'].max() + 1))

    scale = np.ones((days, steps, net.n_bus))
    for kind, base in (('load_q', net.load_q), ('load_p', net.load_p)):
        ids, values = _kind_values(table, kind, days, steps, net.n_bus)
        positions = np.array([net.bus_index[i] for i in ids])
        ordered = np.empty_like(values)
        ordered[:, :, positions] = values
        known = base != 0
        scale[:, :, known] = ordered[:, :, known] / base[known]

    _, pv = _kind_values(table, 'pv_p', days, steps, len(net.devices))
    return ScenarioSet(
        days=days,
        steps_per_day=steps,
        load_scale=scale,
        pv_output=pv,
        seed=int(header.get('seed', -1)),
        noise_amplitude=float(header.get('noise_amplitude', NOISE_AMPLITUDE)),
    )
