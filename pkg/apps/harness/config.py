"""
Experiment configuration: the five experiment classes, per-network defaults
and JSON overrides.
"""
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from apps.gridflow.network import CASE_NAMES
from apps.sac_agent.agent import AgentHyperParams
from apps.scenario.profiles import NOISE_AMPLITUDE, STEPS_PER_DAY
from apps.shared.exceptions import ConfigurationError, ContractViolation

MBO_ACCURATE = 'mbo_accurate'
MBO_REFERENCE = 'mbo_reference'
SAC = 'sac'
RM_SAC_WIDE = 'rm_sac_wide'
RM_SAC = 'rm_sac'
MODES = (MBO_ACCURATE, MBO_REFERENCE, SAC, RM_SAC_WIDE, RM_SAC)
LEARNING_MODES = (SAC, RM_SAC_WIDE, RM_SAC)

BEST_LAMBDA = {'case33': 0.3, 'case69': 0.5, 'case118': 0.2}
IMPEDANCE_FACTOR = {'case33': 1.5, 'case69': 1.5, 'case118': 1.3}
SWEEP_LAMBDAS = tuple(round(0.1 * k, 1) for k in range(11))

# Not part of the hash: the same experiment may be written to different places.
_UNHASHED = {'output_dir'}


@dataclass(frozen=True)
class ExperimentConfig:
    network: str = 'case33'
    mode: str = RM_SAC
    lambda_scale: Optional[float] = None
    impedance_factor: Optional[float] = None
    days: int = 100
    seed: int = 0
    steps_per_day: int = STEPS_PER_DAY
    noise_amplitude: float = NOISE_AMPLITUDE
    # load a persisted scenario instead of generating one from the seed
    scenario_path: Optional[str] = None
    agent: AgentHyperParams = field(default_factory=AgentHyperParams)
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.network not in CASE_NAMES:
            raise ConfigurationError("Unknown network", network=self.network, known=CASE_NAMES)
        if self.mode not in MODES:
            raise ConfigurationError("Unknown experiment mode", mode=self.mode, known=MODES)
        if self.mode == RM_SAC:
            lam = BEST_LAMBDA[self.network] if self.lambda_scale is None else float(self.lambda_scale)
            if not 0.0 <= lam <= 1.0:
                raise ConfigurationError("lambda_scale must lie in [0, 1]", lambda_scale=lam)
            object.__setattr__(self, 'lambda_scale', lam)
        elif self.lambda_scale is not None:
            raise ConfigurationError("lambda_scale only applies to rm_sac", mode=self.mode,
                                     lambda_scale=self.lambda_scale)
        factor = IMPEDANCE_FACTOR[self.network] if self.impedance_factor is None else float(self.impedance_factor)
        if not factor > 0:
            raise ConfigurationError("impedance_factor must be positive", impedance_factor=factor)
        object.__setattr__(self, 'impedance_factor', factor)
        if int(self.days) < 1:
            raise ConfigurationError("days must be at least 1", days=self.days)
        if int(self.steps_per_day) < 1:
            raise ConfigurationError("steps_per_day must be at least 1", steps_per_day=self.steps_per_day)
        if not 0.0 <= self.noise_amplitude < 1.0:
            raise ConfigurationError("noise_amplitude must lie in [0, 1)", noise_amplitude=self.noise_amplitude)
        if not isinstance(self.agent, AgentHyperParams):
            raise ConfigurationError("agent must be AgentHyperParams", agent=type(self.agent).__name__)
        if self.scenario_path is not None:
            object.__setattr__(self, 'scenario_path', str(self.scenario_path))

    @property
    def learning(self) -> bool:
        return self.mode in LEARNING_MODES

    @property
    def run_name(self) -> str:
        name = f"{self.network}_{self.mode}"
        if self.mode == RM_SAC:
            name += f"_l{self.lambda_scale:.2f}"
        return f"{name}_s{self.seed}"

    def variant(self, mode: str, lambda_scale: Optional[float] = None, **changes) -> 'ExperimentConfig':
        """Same scenario and hyperparameters under another experiment class."""
        return replace(self, mode=mode, lambda_scale=lambda_scale if mode == RM_SAC else None, **changes)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['agent']['hidden'] = list(self.agent.hidden)
        return data

    def config_hash(self) -> str:
        data = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _check_keys(data: Dict[str, Any], known, where: str):
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"Unknown {where} keys", unknown=unknown)


def config_from_dict(data: Dict[str, Any], base: ExperimentConfig = None) -> ExperimentConfig:
    """Override ``base`` (defaults if omitted) with the given keys."""
    base = base or ExperimentConfig()
    if not isinstance(data, dict):
        raise ConfigurationError("Configuration must be a JSON object")
    data = dict(data)
    _check_keys(data, [f.name for f in fields(ExperimentConfig)], 'configuration')
    agent_data = data.pop('agent', None) or {}
    if not isinstance(agent_data, dict):
        raise ConfigurationError("agent must be a JSON object")
    _check_keys(agent_data, [f.name for f in fields(AgentHyperParams)], 'agent')
    try:
        agent = replace(base.agent, **agent_data)
        # network-dependent defaults follow the overridden network or mode
        if 'network' in data:
            data.setdefault('impedance_factor', None)
            data.setdefault('lambda_scale', None)
        if data.get('mode', base.mode) != RM_SAC:
            data.setdefault('lambda_scale', None)
        return replace(base, agent=agent, **data)
    except (TypeError, ContractViolation) as exc:
        raise ConfigurationError(f"Invalid configuration: {exc}") from exc


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError("Configuration file not found", path=str(path))
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Configuration file is not valid JSON: {exc}", path=str(path)) from exc
    return data


def load_config(path: Union[str, Path], base: ExperimentConfig = None) -> ExperimentConfig:
    return config_from_dict(read_config_file(path), base)
