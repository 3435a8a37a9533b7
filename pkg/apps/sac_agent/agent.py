"""
Soft actor-critic over residual pre-actions.

With gamma = 0 (the default) the critics regress the immediate reward and
no target networks exist. A positive gamma switches to the discounted
variant with polyak-averaged target critics.
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from apps.actionspace.mapping import PREACTION_LIMIT
from apps.neural.adam import AdamState, adam_step
from apps.neural.checkpoint import load_checkpoint, save_checkpoint
from apps.neural.mlp import Mlp
from apps.neural.policy import GaussianPolicyHead
from apps.sac_agent.buffer import MdpTransition, ReplayBuffer, TransitionBatch
from apps.shared.exceptions import ContractViolation, NumericalError

logger = logging.getLogger(__name__)

TRAIN = 'train'
EVAL = 'eval'


@dataclass(frozen=True)
class AgentHyperParams:
    hidden: Tuple[int, ...] = (512, 512)
    batch_size: int = 128
    buffer_size: int = 30_000
    critic_lr: float = 3e-4
    actor_lr: float = 1e-4
    alpha_lr: float = 3e-4
    initial_alpha: float = 0.2
    random_steps: int = 960
    updates_per_step: int = 4
    gamma: float = 0.0
    polyak: float = 0.995
    reward_scale: float = 0.1
    voltage_penalty: float = 50.0
    entropy_target: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple(int(h) for h in self.hidden))
        checks = {
            'batch_size': self.batch_size >= 1,
            'buffer_size': self.buffer_size >= self.batch_size,
            'critic_lr': self.critic_lr > 0,
            'actor_lr': self.actor_lr > 0,
            'alpha_lr': self.alpha_lr > 0,
            'initial_alpha': self.initial_alpha > 0,
            'random_steps': self.random_steps >= 0,
            'updates_per_step': self.updates_per_step >= 1,
            'gamma': 0.0 <= self.gamma < 1.0,
            'polyak': 0.0 < self.polyak < 1.0,
            'reward_scale': self.reward_scale > 0,
            'voltage_penalty': self.voltage_penalty >= 0,
        }
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise ContractViolation("Invalid agent hyperparameters", fields=failed)


@dataclass(frozen=True)
class UpdateStats:
    critic_loss: float
    actor_loss: float
    alpha: float


class SacAgent:
    def __init__(self, feature_size: int, action_dim: int, params: AgentHyperParams = None, seed: int = 0):
        self.params = params or AgentHyperParams()
        self.feature_size = int(feature_size)
        self.action_dim = int(action_dim)
        self.seed = seed
        init_seq, noise_seq, buffer_seq = np.random.SeedSequence(seed).spawn(3)
        init_rng = np.random.default_rng(init_seq)
        self.rng = np.random.default_rng(noise_seq)

        hidden = self.params.hidden
        self.actor = GaussianPolicyHead(self.feature_size, self.action_dim, hidden, rng=init_rng)
        self.critics = [Mlp((self.feature_size + self.action_dim, *hidden, 1), rng=init_rng) for _ in range(2)]
        self.target_critics = [c.copy() for c in self.critics] if self.discounted else None
        self.log_alpha = np.array([np.log(self.params.initial_alpha)])
        if self.params.entropy_target is None:
            self.entropy_target = -float(self.action_dim)
        else:
            self.entropy_target = float(self.params.entropy_target)

        self.actor_opt = AdamState.for_params(self.actor.parameters(), self.params.actor_lr)
        self.critic_opts = [AdamState.for_params(c.parameters(), self.params.critic_lr) for c in self.critics]
        self.alpha_opt = AdamState.for_params([self.log_alpha], self.params.alpha_lr)
        self.buffer = ReplayBuffer(self.params.buffer_size, self.feature_size, self.action_dim,
                                   rng=np.random.default_rng(buffer_seq))
        self.env_steps = 0
        self.updates = 0
        self._last_log_prob: Optional[np.ndarray] = None

    @property
    def discounted(self) -> bool:
        return self.params.gamma > 0.0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def act(self, s, mode: str = TRAIN) -> np.ndarray:
        """Residual pre-action in (-1, 1); uniform during the random warm-up phase."""
        s = np.asarray(s, dtype=np.float64)
        if mode == EVAL:
            a_rp = self.actor.deterministic(s)
        elif mode == TRAIN:
            if self.env_steps < self.params.random_steps:
                a_rp = self.rng.uniform(-1.0, 1.0, size=self.action_dim)
            else:
                a_rp = self.actor.sample(s, self.rng.standard_normal(self.action_dim)).a_rp
        else:
            raise ContractViolation("Unknown action mode", mode=mode)
        # tanh rounds to exactly +-1 for |u| > 19
        return np.clip(a_rp, -PREACTION_LIMIT, PREACTION_LIMIT)

    def record(self, transition: MdpTransition):
        self.buffer.add(transition)
        self.env_steps += 1

    def ready(self) -> bool:
        return self.env_steps >= self.params.random_steps and len(self.buffer) >= self.params.batch_size

    def _q(self, critic: Mlp, s: np.ndarray, a: np.ndarray):
        out, cache = critic.trace(np.hstack([s, a]))
        return out[:, 0], cache

    def _noise(self, rows: int) -> np.ndarray:
        return self.rng.standard_normal((rows, self.action_dim))

    def _check_finite(self, label: str, values: Sequence[float]):
        if not np.all(np.isfinite(values)):
            diagnostics = {'loss': list(values), 'updates': self.updates, 'env_steps': self.env_steps,
                           'alpha': self.alpha}
            logger.error(f"Non-finite {label} loss after {self.updates} updates: {diagnostics}")
            raise NumericalError(f"Non-finite {label} loss", diagnostics)

    def critic_targets(self, batch: TransitionBatch, gamma: float = None) -> np.ndarray:
        """Regression targets: r in single-period mode, r + gamma (1 - d) soft target value otherwise."""
        if gamma is None:
            gamma = self.params.gamma
        if not self.discounted:
            return batch.r.copy()
        sample = self.actor.sample(batch.s_next, self._noise(len(batch)))
        q_next = np.minimum(*(self._q(critic, batch.s_next, sample.a_rp)[0] for critic in self.target_critics))
        return batch.r + gamma * (1.0 - batch.d) * (q_next - self.alpha * sample.log_prob)

    def critic_losses(self, batch: TransitionBatch, gamma: float = None):
        targets = self.critic_targets(batch, gamma)
        losses, traces = [], []
        for critic in self.critics:
            q, cache = self._q(critic, batch.s, batch.a_rp)
            losses.append(float(np.mean((q - targets) ** 2)))
            traces.append((q, cache))
        return losses, targets, traces

    def critic_update(self, batch: TransitionBatch) -> float:
        losses, targets, traces = self.critic_losses(batch)
        self._check_finite('critic', losses)
        rows = len(batch)
        for critic, opt, (q, cache) in zip(self.critics, self.critic_opts, traces):
            grads, _ = critic.backward((2.0 / rows * (q - targets))[:, None], cache)
            adam_step(opt, critic.parameters(), grads, label='critic')
        if self.discounted:
            for target, critic in zip(self.target_critics, self.critics):
                target.polyak_update(critic, self.params.polyak)
        return float(np.mean(losses))

    def actor_loss(self, s: np.ndarray, noise: np.ndarray):
        """mean(alpha log pi - min_j Q_j) at reparameterised samples; the negated soft objective."""
        sample = self.actor.sample(s, noise)
        traces = [self._q(critic, s, sample.a_rp) for critic in self.critics]
        q_min = np.minimum(traces[0][0], traces[1][0])
        loss = float(np.mean(self.alpha * sample.log_prob - q_min))
        return loss, sample, traces

    def actor_update(self, batch: TransitionBatch, noise: np.ndarray = None) -> float:
        rows = len(batch)
        noise = self._noise(rows) if noise is None else noise
        loss, sample, traces = self.actor_loss(batch.s, noise)
        self._check_finite('actor', [loss])
        first = traces[0][0] <= traces[1][0]
        grad_action = np.zeros((rows, self.action_dim))
        for critic, (_, cache), chosen in zip(self.critics, traces, (first, ~first)):
            _, grad_input = critic.backward((-chosen.astype(float) / rows)[:, None], cache)
            grad_action += grad_input[:, self.feature_size:]
        grads = self.actor.backward(sample, grad_action, np.full(rows, self.alpha / rows))
        adam_step(self.actor_opt, self.actor.parameters(), grads, label='actor')
        self._last_log_prob = sample.log_prob
        return loss

    def temperature_update(self, batch: TransitionBatch, log_prob: np.ndarray = None) -> float:
        """One Adam step on log alpha for L = mean(-alpha log pi - alpha H)."""
        if log_prob is None:
            log_prob = self.actor.sample(batch.s, self._noise(len(batch))).log_prob
        gap = float(np.mean(log_prob)) + self.entropy_target
        adam_step(self.alpha_opt, [self.log_alpha], [np.array([-self.alpha * gap])], label='temperature')
        return self.alpha

    def update(self) -> UpdateStats:
        batch = self.buffer.sample(self.params.batch_size)
        critic_loss = self.critic_update(batch)
        actor_loss = self.actor_update(batch)
        alpha = self.temperature_update(batch, self._last_log_prob)
        self.updates += 1
        return UpdateStats(critic_loss, actor_loss, alpha)

    def networks(self) -> dict:
        nets = {'actor': self.actor.net, 'critic1': self.critics[0], 'critic2': self.critics[1]}
        if self.target_critics:
            nets.update({'target1': self.target_critics[0], 'target2': self.target_critics[1]})
        return nets

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.networks(), {
            'log_alpha': float(self.log_alpha[0]),
            'env_steps': self.env_steps,
            'updates': self.updates,
            'feature_size': self.feature_size,
            'action_dim': self.action_dim,
        })

    @classmethod
    def load(cls, path: Union[str, Path], params: AgentHyperParams = None, seed: int = 0) -> 'SacAgent':
        """Restore network parameters and temperature; optimiser moments start fresh."""
        networks, extra = load_checkpoint(path)
        params = replace(params or AgentHyperParams(), hidden=networks['actor'].sizes[1:-1])
        agent = cls(int(extra['feature_size']), int(extra['action_dim']), params, seed)
        for name, net in agent.networks().items():
            if name in networks:
                net.load_parameters(networks[name])
        agent.log_alpha[0] = extra['log_alpha']
        agent.env_steps = int(extra['env_steps'])
        agent.updates = int(extra['updates'])
        return agent


def stack_transitions(transitions: List[MdpTransition]) -> TransitionBatch:
    return TransitionBatch(
        s=np.array([t.s for t in transitions]),
        a_rp=np.array([t.a_rp for t in transitions]),
        r=np.array([t.r for t in transitions], dtype=float),
        s_next=np.array([t.s_next for t in transitions]),
        d=np.array([float(t.d) for t in transitions]),
    )
