"""
Adaptive-moment optimiser over lists of numpy parameter arrays.
"""
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from apps.shared.exceptions import ContractViolation, NumericalError


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float, **kwargs) -> 'AdamState':
        return cls(lr=lr, m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params], **kwargs)


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              label: str = 'parameters') -> Sequence[np.ndarray]:
    """Bias-corrected Adam update applied in place; returns ``params``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ContractViolation("Adam state, parameters and gradients differ in length",
                                params=len(params), grads=len(grads), state=len(state.m))
    for k, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[k].shape:
            raise ContractViolation("Gradient shape mismatch", index=k, param=p.shape, grad=np.shape(g))
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"Non-finite gradient for {label}", {
                'tensor': k, 'step': state.t, 'nan': int(np.isnan(g).sum()), 'inf': int(np.isinf(g).sum()),
            })
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return params
