"""
Summary tables over metrics files: the lambda sweep, errors against the
accurate-model baseline, the early-stage table and the ordering report.
"""
import logging
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from apps.harness.config import (
    BEST_LAMBDA, MBO_ACCURATE, MBO_REFERENCE, MODES, RM_SAC, RM_SAC_WIDE, SAC, ExperimentConfig,
)
from apps.harness.metrics import (
    EARLY_WINDOW_DAYS, FINAL_WINDOW_DAYS, daily_aggregates, final_window_means, read_metrics, window,
)
from apps.harness.runner import ExperimentResult, metrics_path_for, run_experiment
from apps.shared.exceptions import ConfigurationError, InsufficientDataError, MetricsAlignmentError

logger = logging.getLogger(__name__)

Runner = Callable[[ExperimentConfig], ExperimentResult]

SWEEP_COLUMNS = ['critic_loss', 'train_reward', 'test_reward', 'train_minus_test', 'test_ploss', 'test_violation']
ERROR_COLUMNS = {'test_reward': 'reward_error', 'test_ploss': 'ploss_error', 'test_violation': 'violation_error'}
EARLY_LAMBDAS = (0.2, 0.4, 0.8)


def lambda_sweep(base: ExperimentConfig, lambdas: Iterable[float], seeds: Sequence[int] = None,
                 runner: Runner = run_experiment) -> pd.DataFrame:
    """Run rm_sac per lambda (and seed); final-window means averaged over seeds."""
    lambdas = [float(lam) for lam in lambdas]
    bad = [lam for lam in lambdas if not 0.0 <= lam <= 1.0]
    if bad:
        raise ConfigurationError("Sweep lambdas must lie in [0, 1]", lambdas=bad)
    seeds = list(seeds) if seeds else [base.seed]
    records = []
    hashes = set()
    for lam in lambdas:
        for seed in seeds:
            result = runner(base.variant(RM_SAC, lam, seed=seed))
            hashes.add(result.config.config_hash())
            records.append({'lambda_scale': lam, 'seed': seed,
                            **{c: result.summary[c] for c in SWEEP_COLUMNS}})
            logger.info(f"Sweep lambda={lam:.2f} seed={seed}: test reward {result.summary['test_reward']:.4f}")
    table = pd.DataFrame.from_records(records)
    summary = table.groupby('lambda_scale', sort=False)[SWEEP_COLUMNS].mean()
    summary['seeds'] = len(seeds)
    summary = summary.reset_index()
    summary.attrs['config_hashes'] = sorted(hashes)
    return summary


def _frame(metrics: Union[pd.DataFrame, str, Path]) -> pd.DataFrame:
    if isinstance(metrics, (str, Path)):
        metrics, _ = read_metrics(metrics)
    return metrics


def error_vs_baseline(method: Union[pd.DataFrame, str, Path], baseline: Union[pd.DataFrame, str, Path],
                      final_days: int = FINAL_WINDOW_DAYS) -> Tuple[pd.DataFrame, pd.Series]:
    """Per-day baseline result minus method result for reward, loss and violation.

    Both inputs are per-step metrics (frames or CSV paths) covering the same
    days and steps. Returns the daily error table and its final-window means.
    """
    method, baseline = _frame(method), _frame(baseline)
    left = method.set_index(['day', 'step']).index
    right = baseline.set_index(['day', 'step']).index
    if len(left) != len(right) or not left.sort_values().equals(right.sort_values()):
        raise MetricsAlignmentError("Method and baseline cover different days or steps",
                                    method_rows=len(left), baseline_rows=len(right))
    method_daily = daily_aggregates(method).set_index('day')
    baseline_daily = daily_aggregates(baseline).set_index('day')
    errors = pd.DataFrame({
        name: baseline_daily[column] - method_daily[column] for column, name in ERROR_COLUMNS.items()
    }).reset_index()
    tail = window(errors, min(final_days, len(errors)))
    return errors, tail.drop(columns=['day']).mean()


def early_stage_report(runs: Mapping[float, Union[pd.DataFrame, str, Path]],
                       days: int = EARLY_WINDOW_DAYS) -> pd.DataFrame:
    """Mean daily test reward over the first ``days`` days, one row per lambda."""
    rows = []
    for lam, metrics in sorted(runs.items()):
        daily = daily_aggregates(_frame(metrics))
        early = window(daily, days, final=False)
        rows.append({'lambda_scale': float(lam), 'early_test_reward': float(early['test_reward'].mean())})
    return pd.DataFrame(rows, columns=['lambda_scale', 'early_test_reward'])


def compare_methods(base: ExperimentConfig, runner: Runner = run_experiment,
                    best_lambda: Optional[float] = None) -> pd.DataFrame:
    """Run all five classes on one scenario; final-window errors against mbo_accurate."""
    best_lambda = BEST_LAMBDA[base.network] if best_lambda is None else best_lambda
    results = {mode: runner(base.variant(mode, best_lambda if mode == RM_SAC else None)) for mode in MODES}
    baseline = results[MBO_ACCURATE].metrics_path
    rows = []
    for mode, result in results.items():
        _, means = error_vs_baseline(result.metrics_path, baseline)
        rows.append({'mode': mode, 'lambda_scale': result.config.lambda_scale,
                     **{c: result.summary[c] for c in ('test_reward', 'test_ploss', 'test_violation')},
                     **means.to_dict()})
    table = pd.DataFrame(rows)
    table.attrs['config_hashes'] = sorted({r.config.config_hash() for r in results.values()})
    return table


def _check(criterion: str, description: str, passed: Optional[bool], value) -> dict:
    status = 'missing' if passed is None else ('pass' if passed else 'fail')
    return {'criterion': criterion, 'description': description, 'status': status, 'value': value}


def _monotone(values: Sequence[float], strict: bool, decreasing: bool) -> bool:
    steps = np.diff(np.asarray(values, dtype=float))
    if decreasing:
        steps = -steps
    return bool(np.all(steps > 0) if strict else np.all(steps >= 0))


def acceptance_report(directory: Union[str, Path], network: str = 'case33', seed: int = 0,
                      best_lambda: Optional[float] = None, relative_gap: float = 0.1,
                      error_ratio: float = 2.0) -> pd.DataFrame:
    """Evaluate the ordering checks (a)-(g) on the metrics files found in ``directory``.

    Files are looked up by run name, so the runs must share network and
    seed. Checks whose runs are missing are reported as 'missing'.
    """
    directory = Path(directory)
    best_lambda = BEST_LAMBDA[network] if best_lambda is None else best_lambda
    base = ExperimentConfig(network=network, mode=SAC, seed=seed)
    hashes = set()

    def load(mode, lam=None):
        path = metrics_path_for(base.variant(mode, lam), directory)
        if not path.exists():
            return None
        frame, header = read_metrics(path)
        if header.get('config_hash'):
            hashes.add(header['config_hash'])
        return frame

    def final(frame):
        return final_window_means(daily_aggregates(frame))

    runs = {mode: load(mode) for mode in (MBO_ACCURATE, MBO_REFERENCE, SAC, RM_SAC_WIDE)}
    best = load(RM_SAC, best_lambda)
    sweep = {lam: load(RM_SAC, lam) for lam in EARLY_LAMBDAS}
    rows = []

    if best is None or runs[SAC] is None or runs[MBO_REFERENCE] is None:
        rows.append(_check('a', 'rm_sac beats sac and mbo_reference', None, None))
    else:
        r_best, r_sac, r_ref = (final(f)['test_reward'] for f in (best, runs[SAC], runs[MBO_REFERENCE]))
        rows.append(_check('a', 'rm_sac beats sac and mbo_reference', bool(r_best > r_sac and r_best > r_ref),
                           f"{r_best:.4f} / {r_sac:.4f} / {r_ref:.4f}"))

    if runs[SAC] is None or runs[RM_SAC_WIDE] is None:
        rows.append(_check('b', 'sac and rm_sac_wide agree', None, None))
    else:
        r_sac, r_wide = final(runs[SAC])['test_reward'], final(runs[RM_SAC_WIDE])['test_reward']
        gap = abs(r_sac - r_wide) / max(abs(r_sac), abs(r_wide), 1e-12)
        rows.append(_check('b', 'sac and rm_sac_wide agree', bool(gap <= relative_gap), f"{gap:.4f}"))

    if best is None or runs[SAC] is None or runs[MBO_ACCURATE] is None:
        rows.append(_check('c', 'rm_sac reward error smaller than sac', None, None))
    else:
        e_best = abs(error_vs_baseline(best, runs[MBO_ACCURATE])[1]['reward_error'])
        e_sac = abs(error_vs_baseline(runs[SAC], runs[MBO_ACCURATE])[1]['reward_error'])
        rows.append(_check('c', 'rm_sac reward error smaller than sac', bool(error_ratio * e_best <= e_sac),
                           f"{e_best:.4f} / {e_sac:.4f}"))

    if best is None:
        rows.append(_check('d', 'rm_sac has no voltage violation', None, None))
    else:
        violation = final(best)['test_violation']
        rows.append(_check('d', 'rm_sac has no voltage violation', bool(violation == 0.0), f"{violation:.6g}"))

    if any(frame is None for frame in sweep.values()):
        for name in ('e', 'f', 'g'):
            rows.append(_check(name, 'lambda trend', None, None))
    else:
        try:
            early = early_stage_report(sweep)['early_test_reward'].tolist()
            rows.append(_check('e', 'early test reward falls with lambda',
                               _monotone(early, strict=True, decreasing=True), early))
        except InsufficientDataError:
            rows.append(_check('e', 'early test reward falls with lambda', None, None))
        finals = [final(sweep[lam]) for lam in EARLY_LAMBDAS]
        gaps = [f['train_minus_test'] for f in finals]
        rows.append(_check('f', 'train minus test gap widens with lambda',
                           _monotone(gaps, strict=False, decreasing=True), gaps))
        losses = [f['critic_loss'] for f in finals]
        rows.append(_check('g', 'critic loss grows with lambda',
                           _monotone(losses, strict=False, decreasing=False), losses))
    table = pd.DataFrame(rows, columns=['criterion', 'description', 'status', 'value'])
    table.attrs['config_hashes'] = sorted(hashes)
    return table


def write_table(table: pd.DataFrame, path: Union[str, Path],
                config_hashes: Optional[Iterable[str]] = None) -> Path:
    """CSV with a ``# config_hash=`` header naming the runs the table was built from."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    hashes = table.attrs.get('config_hashes', []) if config_hashes is None else config_hashes
    with path.open('w', encoding='utf-8', newline='') as handle:
        handle.write(f"# config_hash={','.join(sorted(set(hashes)))}\n")
        table.to_csv(handle, index=False, float_format='%.17g')
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path
