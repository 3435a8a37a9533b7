"""
Per-step metrics rows, their CSV file and daily aggregation.
"""
import logging
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Dict, Iterable, Tuple, Union

import pandas as pd

from apps.shared.exceptions import ContractViolation, InsufficientDataError

logger = logging.getLogger(__name__)

FINAL_WINDOW_DAYS = 50
EARLY_WINDOW_DAYS = 10


@dataclass(frozen=True)
class MetricsRow:
    day: int
    step: int
    train_reward: float
    test_reward: float
    test_ploss: float
    test_violation: float
    critic_loss: float
    alpha: float
    reference_action_norm: float


METRICS_COLUMNS = [f.name for f in fields(MetricsRow)]


class MetricsWriter:
    """Appends rows to a metrics CSV whose first line carries the config hash."""

    def __init__(self, path: Union[str, Path], config_hash: str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.rows_written = 0
        self._handle = self.path.open('w', encoding='utf-8', newline='')
        self._handle.write(f"# config_hash={config_hash}\n")
        self._handle.write(','.join(METRICS_COLUMNS) + '\n')

    def write(self, rows: Iterable[MetricsRow]):
        rows = list(rows)
        if not rows:
            return
        frame = pd.DataFrame([astuple(row) for row in rows], columns=METRICS_COLUMNS)
        frame.to_csv(self._handle, header=False, index=False, float_format='%.17g', na_rep='nan')
        self._handle.flush()
        self.rows_written += len(rows)

    def close(self):
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_header(path: Union[str, Path]) -> Dict[str, str]:
    with Path(path).open(encoding='utf-8') as handle:
        first = handle.readline().strip()
    if not first.startswith('#'):
        return {}
    return dict(token.split('=', 1) for token in first[1:].split() if '=' in token)


def read_metrics(path: Union[str, Path]) -> Tuple[pd.DataFrame, Dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise ContractViolation("Metrics file not found", path=str(path))
    frame = pd.read_csv(path, comment='#')
    if list(frame.columns) != METRICS_COLUMNS:
        raise ContractViolation("Metrics file has unexpected columns", path=str(path), columns=list(frame.columns))
    return frame, read_header(path)


def daily_aggregates(frame: pd.DataFrame) -> pd.DataFrame:
    """Daily sums of rewards, loss and violation; daily means of critic loss, alpha and |a_m|."""
    grouped = frame.groupby('day', sort=True)
    daily = grouped[['train_reward', 'test_reward', 'test_ploss', 'test_violation']].sum()
    daily[['critic_loss', 'alpha', 'reference_action_norm']] = grouped[
        ['critic_loss', 'alpha', 'reference_action_norm']].mean()
    daily['steps'] = grouped.size()
    daily['train_minus_test'] = daily['train_reward'] - daily['test_reward']
    return daily.reset_index()


def window(daily: pd.DataFrame, days: int, final: bool = True) -> pd.DataFrame:
    """The last (or first) ``days`` simulated days of a daily table."""
    if len(daily) < days:
        raise InsufficientDataError(f"Need {days} simulated days", available=len(daily))
    ordered = daily.sort_values('day')
    return ordered.tail(days) if final else ordered.head(days)


def final_window_means(daily: pd.DataFrame, days: int = FINAL_WINDOW_DAYS) -> pd.Series:
    """Means over the final window; shorter runs use every day they have."""
    selected = window(daily, min(days, len(daily)))
    return selected.drop(columns=['day', 'steps']).mean()
