"""
Tanh-squashed Gaussian policy head.

The network emits a mean and a log standard deviation per action
dimension; samples are a = tanh(mu + sigma * xi) with xi ~ N(0, I).
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from apps.neural.mlp import ForwardCache, Mlp

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)


def tanh_log_jacobian(u: np.ndarray) -> np.ndarray:
    """log(1 - tanh(u)^2) without cancellation for large |u|."""
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def squashed_log_prob(u, mean, log_std) -> np.ndarray:
    """Log-density of a = tanh(u) for u ~ N(mean, exp(log_std)^2), summed over the last axis."""
    u = np.asarray(u, dtype=np.float64)
    z = (u - mean) / np.exp(log_std)
    per_dim = -0.5 * z ** 2 - log_std - HALF_LOG_TWO_PI - tanh_log_jacobian(u)
    return per_dim.sum(axis=-1)


@dataclass
class PolicySample:
    a_rp: np.ndarray
    log_prob: np.ndarray
    u: np.ndarray
    mean: np.ndarray
    log_std: np.ndarray
    noise: np.ndarray
    in_range: np.ndarray
    cache: ForwardCache


class GaussianPolicyHead:
    def __init__(self, feature_size: int, action_dim: int, hidden: Sequence[int] = (512, 512),
                 rng: Optional[np.random.Generator] = None, net: Optional[Mlp] = None):
        self.action_dim = int(action_dim)
        self.net = net or Mlp((feature_size, *hidden, 2 * self.action_dim), rng=rng)

    def parameters(self) -> List[np.ndarray]:
        return self.net.parameters()

    def _split(self, out: np.ndarray):
        mean = out[..., :self.action_dim]
        raw = out[..., self.action_dim:]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        in_range = (raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)
        return mean, log_std, in_range

    def distribution(self, s):
        mean, log_std, _ = self._split(self.net.trace(s)[0])
        return mean, log_std

    def sample(self, s, noise) -> PolicySample:
        out, cache = self.net.trace(s)
        mean, log_std, in_range = self._split(out)
        noise = np.asarray(noise, dtype=np.float64)
        u = mean + np.exp(log_std) * noise
        return PolicySample(
            a_rp=np.tanh(u),
            log_prob=squashed_log_prob(u, mean, log_std),
            u=u,
            mean=mean,
            log_std=log_std,
            noise=noise,
            in_range=in_range,
            cache=cache,
        )

    def deterministic(self, s) -> np.ndarray:
        mean, _ = self.distribution(s)
        return np.tanh(mean)

    def backward(self, sample: PolicySample, grad_action, grad_log_prob) -> List[np.ndarray]:
        """Parameter gradients of a loss through the reparameterised sample.

        ``grad_action`` is dL/da_rp per row and dimension, ``grad_log_prob``
        is dL/dlog_prob per row. The noise is held fixed.
        """
        grad_action = np.asarray(grad_action, dtype=np.float64)
        grad_log_prob = np.asarray(grad_log_prob, dtype=np.float64)[..., None]
        a = sample.a_rp
        # d log_prob / du comes only from the -log(1 - tanh^2 u) term, whose derivative is 2 tanh u.
        grad_u = grad_action * (1.0 - a ** 2) + grad_log_prob * 2.0 * a
        sigma = np.exp(sample.log_std)
        grad_mean = grad_u
        grad_log_std = (grad_u * sigma * sample.noise - grad_log_prob) * sample.in_range
        grad_out = np.concatenate([grad_mean, grad_log_std], axis=-1)
        grads, _ = self.net.backward(grad_out, sample.cache)
        return grads
