"""
CSV cache of reference actions.

Rows are keyed by (network, impedance_factor, voltage_penalty, seed,
scenario, day, step) and hold one value per device, so reference dispatch is
solved once and reused by every experiment that shares the scenario. The
``scenario`` entry is the digest of that day's exogenous inputs, which
makes rows of a different scenario unreachable. Each row also records the
config hash of the run that solved it; the header lists them all.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from apps.shared.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

KEY_COLUMNS = ['network', 'impedance_factor', 'voltage_penalty', 'seed', 'scenario', 'day', 'step']
SOURCE_COLUMN = 'config_hash'

CacheKey = Tuple[str, float, float, int, str, int, int]


def cache_key(network: str, impedance_factor: float, voltage_penalty: float, seed: int,
              scenario: str, day: int, step: int) -> CacheKey:
    return (str(network), round(float(impedance_factor), 9), round(float(voltage_penalty), 9), int(seed),
            str(scenario), int(day), int(step))


class ReferenceActionCache:
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._entries: Dict[CacheKey, np.ndarray] = {}
        self._sources: Dict[CacheKey, str] = {}
        self._dirty = False
        self.hits = 0
        self.misses = 0
        if self.path.exists():
            self._load()

    def _load(self):
        table = pd.read_csv(self.path, comment='#',
                            dtype={'network': str, 'scenario': str, SOURCE_COLUMN: str}, keep_default_na=False)
        device_columns = [c for c in table.columns if c.startswith('a_')]
        expected = KEY_COLUMNS + [SOURCE_COLUMN]
        if list(table.columns[:len(expected)]) != expected or not device_columns:
            raise ConfigurationError("Reference cache has unexpected columns", path=str(self.path),
                                     columns=list(table.columns))
        for row in table.itertuples(index=False):
            values = pd.to_numeric(pd.Series([getattr(row, c) for c in device_columns]), errors='coerce')
            values = values.to_numpy(dtype=float)
            key = cache_key(row.network, row.impedance_factor, row.voltage_penalty, row.seed,
                            row.scenario, row.day, row.step)
            self._entries[key] = values[np.isfinite(values)]
            self._sources[key] = getattr(row, SOURCE_COLUMN)
        logger.info(f"Loaded {len(self._entries)} cached reference actions from {self.path}")

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: CacheKey) -> Optional[np.ndarray]:
        value = self._entries.get(key)
        if value is None:
            self.misses += 1
            return None
        self.hits += 1
        return value.copy()

    def source(self, key: CacheKey) -> Optional[str]:
        """Config hash of the run that solved ``key``."""
        return self._sources.get(key)

    def put(self, key: CacheKey, a_m, config_hash: str = ''):
        self._entries[key] = np.array(a_m, dtype=float)
        self._sources[key] = str(config_hash)
        self._dirty = True

    def flush(self) -> Path:
        if not self._dirty:
            return self.path
        width = max(len(v) for v in self._entries.values())
        records = []
        for key, values in sorted(self._entries.items()):
            record = dict(zip(KEY_COLUMNS, key))
            record[SOURCE_COLUMN] = self._sources.get(key, '')
            padded = np.full(width, np.nan)
            padded[:len(values)] = values
            record.update({f"a_{i}": padded[i] for i in range(width)})
            records.append(record)
        hashes = sorted({h for h in self._sources.values() if h})
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open('w', encoding='utf-8', newline='') as handle:
            handle.write(f"# config_hash={','.join(hashes)}\n")
            pd.DataFrame.from_records(records).to_csv(handle, index=False, float_format='%.17g', na_rep='nan')
        self._dirty = False
        logger.info(f"Wrote {len(records)} reference actions to {self.path}")
        return self.path
