"""
Replay buffer over residual pre-actions.
"""
from dataclasses import dataclass

import numpy as np

from apps.shared.exceptions import ContractViolation


@dataclass(frozen=True, eq=False)
class MdpTransition:
    s: np.ndarray
    a_rp: np.ndarray
    r: float
    s_next: np.ndarray
    d: bool


@dataclass(frozen=True, eq=False)
class TransitionBatch:
    s: np.ndarray
    a_rp: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    d: np.ndarray

    def __len__(self):
        return len(self.r)


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is overwritten first."""

    def __init__(self, capacity: int, feature_size: int, action_dim: int, rng: np.random.Generator = None):
        if capacity < 1:
            raise ContractViolation("Buffer capacity must be positive", capacity=capacity)
        self.capacity = capacity
        self.rng = rng or np.random.default_rng()
        self.s = np.zeros((capacity, feature_size))
        self.a_rp = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, feature_size))
        self.d = np.zeros(capacity)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, transition: MdpTransition):
        a_rp = np.asarray(transition.a_rp, dtype=float)
        if np.any(np.abs(a_rp) >= 1.0):
            raise ContractViolation("Stored pre-actions must lie in (-1, 1)", a_rp=a_rp.tolist())
        if not np.isfinite(transition.r):
            raise ContractViolation("Stored reward must be finite", r=transition.r)
        i = self._next
        self.s[i] = transition.s
        self.a_rp[i] = a_rp
        self.r[i] = transition.r
        self.s_next[i] = transition.s_next
        self.d[i] = float(transition.d)
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int) -> TransitionBatch:
        if self._size == 0:
            raise ContractViolation("Cannot sample from an empty buffer")
        index = self.rng.integers(0, self._size, size=batch_size)
        return TransitionBatch(self.s[index], self.a_rp[index], self.r[index], self.s_next[index], self.d[index])
