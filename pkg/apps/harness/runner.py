"""
Runs one experiment class end to end and records it.
"""
import logging
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

from django.conf import settings

from apps.actionspace.mapping import FULL, RESIDUAL, WIDE, ResidualActionSpace, ResidualConfig
from apps.gridflow.network import Network, load_case, scale_impedances
from apps.harness.config import MBO_ACCURATE, RM_SAC, SAC, ExperimentConfig
from apps.harness.metrics import MetricsWriter, daily_aggregates, final_window_means, read_metrics
from apps.harness.models import ExperimentRun
from apps.refopt.cache import ReferenceActionCache, cache_key
from apps.refopt.dispatch import dispatch_problem, solve_dispatch
from apps.sac_agent.agent import SacAgent
from apps.sac_agent.training import ReferenceProvider, train_day_loop
from apps.scenario.profiles import ScenarioSet, device_boxes, generate_profiles
from apps.scenario.storage import read_scenario_csv, write_scenario_csv
from apps.shared.exceptions import ConfigurationError
from apps.shared.utils.telegram_alerts import alert_to_telegram
from apps.vvc_env.env import VoltageLimits, VoltVarEnv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    metrics_path: Path
    steps: int
    summary: Dict[str, float]
    checkpoint_path: Optional[Path] = None
    scenario_path: Optional[Path] = None
    clamp_events: int = 0


def output_dir_for(cfg: ExperimentConfig, output_dir: Union[str, Path, None] = None) -> Path:
    return Path(output_dir or cfg.output_dir or settings.VVC_OUTPUT_DIR)


def metrics_path_for(cfg: ExperimentConfig, output_dir: Union[str, Path, None] = None) -> Path:
    return output_dir_for(cfg, output_dir) / f"{cfg.run_name}.csv"


def scenario_path_for(cfg: ExperimentConfig, output_dir: Union[str, Path, None] = None) -> Path:
    """Generated scenarios are shared by every class run on the same seed, days and noise."""
    name = f"scenario_{cfg.network}_s{cfg.seed}_{cfg.days}x{cfg.steps_per_day}_a{cfg.noise_amplitude:g}.csv"
    return output_dir_for(cfg, output_dir) / name


def reference_cache_for(cfg: ExperimentConfig) -> ReferenceActionCache:
    """One cache file per network and day length; keys also carry the scenario day digest."""
    return ReferenceActionCache(Path(settings.VVC_CACHE_DIR) / f"{cfg.network}_{cfg.steps_per_day}.csv")


def scenario_for(cfg: ExperimentConfig, net: Network) -> ScenarioSet:
    """The persisted scenario named by ``cfg.scenario_path``, or a fresh one from the seed."""
    if cfg.scenario_path is None:
        return generate_profiles(net, net.devices, cfg.days, cfg.seed, cfg.steps_per_day, cfg.noise_amplitude)
    path = Path(cfg.scenario_path)
    if not path.exists():
        raise ConfigurationError("Scenario file not found", path=str(path))
    scenario = read_scenario_csv(path, net)
    if scenario.steps_per_day != cfg.steps_per_day or scenario.days < cfg.days:
        raise ConfigurationError("Scenario file does not cover the configured run", path=str(path),
                                 days=scenario.days, steps_per_day=scenario.steps_per_day,
                                 wanted_days=cfg.days, wanted_steps_per_day=cfg.steps_per_day)
    logger.info(f"Loaded scenario for {cfg.run_name} from {path}")
    return scenario


def reference_provider(cfg: ExperimentConfig, net: Network, scenario: ScenarioSet,
                       cache: Optional[ReferenceActionCache] = None) -> Optional[ReferenceProvider]:
    """Per-step dispatch on the accurate model (mbo_accurate) or the reference model (all others)."""
    if cfg.mode == SAC:
        return None
    factor = 1.0 if cfg.mode == MBO_ACCURATE else cfg.impedance_factor
    model = scale_impedances(net, factor)
    box = device_boxes(net.devices)
    limits = VoltageLimits()
    c_v = cfg.agent.voltage_penalty
    source = cfg.config_hash()
    digests = {}
    # training and evaluation passes ask for the same step
    solved = {}

    def provide(day: int, step: int):
        if day not in digests:
            digests[day] = scenario.day_digest(day)
        key = cache_key(net.name, factor, c_v, cfg.seed, digests[day], day, step)
        if key in solved:
            return solved[key]
        if cache is not None:
            cached = cache.get(key)
            if cached is not None:
                solved[key] = cached
                return cached
        solution = solve_dispatch(dispatch_problem(model, scenario, day, step, limits, c_v, cfg.seed, box))
        if not solution.converged:
            logger.warning(f"Dispatch for day {day} step {step} stopped at the iteration cap")
        if cache is not None:
            cache.put(key, solution.a_m, source)
        solved[key] = solution.a_m
        return solution.a_m

    return provide


def action_space_for(cfg: ExperimentConfig, box) -> ResidualActionSpace:
    if cfg.mode == SAC:
        return ResidualActionSpace(box, FULL)
    if cfg.mode == RM_SAC:
        return ResidualActionSpace(box, RESIDUAL, ResidualConfig.from_lambda(cfg.lambda_scale, box))
    # the model-based baselines execute a_m through the same wide space as rm_sac_wide
    return ResidualActionSpace(box, WIDE)


def run_experiment(cfg: ExperimentConfig, output_dir: Union[str, Path, None] = None,
                   cache: Optional[ReferenceActionCache] = None, save_agent: bool = True) -> ExperimentResult:
    """Execute ``cfg`` and write its metrics CSV; returns the path and final-window summary."""
    net = load_case(cfg.network)
    scenario = scenario_for(cfg, net)
    if cfg.scenario_path is None:
        scenario_path = scenario_path_for(cfg, output_dir)
        if not scenario_path.exists():
            write_scenario_csv(scenario, net, scenario_path, cfg.config_hash())
    else:
        scenario_path = Path(cfg.scenario_path)
    env = VoltVarEnv(net, scenario, c_v=cfg.agent.voltage_penalty)
    test_env = VoltVarEnv(net, scenario, c_v=cfg.agent.voltage_penalty)
    agent = SacAgent(env.feature_size, env.n_device, cfg.agent, seed=cfg.seed) if cfg.learning else None
    space = action_space_for(cfg, env.box)
    reference = reference_provider(cfg, net, scenario, cache)
    path = metrics_path_for(cfg, output_dir)

    logger.info(f"Starting {cfg.run_name}: {cfg.days} days on {net.name}, hash {cfg.config_hash()[:12]}")
    try:
        with MetricsWriter(path, cfg.config_hash()) as writer:
            steps = train_day_loop(env, test_env, agent, space, reference, range(cfg.days), writer.write)
    except Exception as exc:
        logger.error(f"Experiment {cfg.run_name} failed: {exc}", exc_info=True)
        alert_to_telegram(traceback.format_exc(), message=f"{cfg.run_name}: {exc}",
                          context={'config_hash': cfg.config_hash(), 'metrics': str(path)})
        raise
    finally:
        if cache is not None:
            cache.flush()

    clamp_events = space.guard.clamp_events
    if clamp_events:
        logger.warning(f"{cfg.run_name}: reference action clamped into the device box {clamp_events} time(s)")
    checkpoint = None
    if agent is not None and save_agent:
        checkpoint = agent.save(path.with_name(f"{cfg.run_name}_agent.npz"))
    frame, _ = read_metrics(path)
    summary = final_window_means(daily_aggregates(frame)).to_dict()
    logger.info(f"Finished {cfg.run_name}: final test reward {summary['test_reward']:.4f}, "
                f"violation {summary['test_violation']:.5f}, clamp events {clamp_events}")
    return ExperimentResult(cfg, path, steps, summary, checkpoint, scenario_path, clamp_events)


def run_and_record(cfg: ExperimentConfig, output_dir: Union[str, Path, None] = None,
                   cache: Optional[ReferenceActionCache] = None) -> ExperimentResult:
    """run_experiment wrapped in an ExperimentRun row that tracks its status."""
    run = ExperimentRun.start(cfg, metrics_path_for(cfg, output_dir))
    try:
        result = run_experiment(cfg, output_dir, cache)
    except Exception as exc:
        run.mark_failed(exc)
        raise
    run.mark_completed(result)
    return result
