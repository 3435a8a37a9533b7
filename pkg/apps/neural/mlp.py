"""
Fully connected rectified-linear networks with analytic backpropagation.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from apps.shared.exceptions import ContractViolation


@dataclass
class ForwardCache:
    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    squeeze: bool


class Mlp:
    """Affine layers with ReLU between them and a linear output layer.

    Parameters are float64. ``forward`` keeps the last cache so that a
    following ``backward`` can reuse it; ``trace`` hands the cache back to
    the caller when several passes must be differentiated independently.
    """

    def __init__(self, sizes: Sequence[int], rng: Optional[np.random.Generator] = None,
                 weights: Optional[List[np.ndarray]] = None, biases: Optional[List[np.ndarray]] = None):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ContractViolation("An Mlp needs at least input and output widths", sizes=self.sizes)
        if weights is None:
            rng = rng or np.random.default_rng()
            weights, biases = [], []
            for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
                limit = np.sqrt(6.0 / fan_in)
                weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
                biases.append(np.zeros(fan_out))
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[k], self.sizes[k + 1]) or b.shape != (self.sizes[k + 1],):
                raise ContractViolation("Layer shapes do not match the widths", layer=k,
                                        weight=w.shape, bias=b.shape, sizes=self.sizes)
        self._cache: Optional[ForwardCache] = None

    @property
    def input_size(self) -> int:
        return self.sizes[0]

    @property
    def output_size(self) -> int:
        return self.sizes[-1]

    def parameters(self) -> List[np.ndarray]:
        """Weights and biases interleaved, layer by layer; the arrays are live."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def trace(self, x) -> Tuple[np.ndarray, ForwardCache]:
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.input_size:
            raise ContractViolation("Input width mismatch", expected=self.input_size, got=h.shape[1])
        inputs, pre = [], []
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            pre.append(z)
            h = z if k == last else np.maximum(z, 0.0)
        return (h[0] if squeeze else h), ForwardCache(inputs, pre, squeeze)

    def forward(self, x) -> np.ndarray:
        out, self._cache = self.trace(x)
        return out

    __call__ = forward

    def backward(self, grad_out, cache: Optional[ForwardCache] = None) -> Tuple[List[np.ndarray], np.ndarray]:
        """Gradients of a scalar loss given dL/d(output).

        Returns the parameter gradients in ``parameters()`` order and the
        gradient with respect to the input.
        """
        cache = cache or self._cache
        if cache is None:
            raise ContractViolation("backward called without a forward pass")
        grad = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
        if grad.shape != cache.pre_activations[-1].shape:
            raise ContractViolation("Upstream gradient shape mismatch", expected=cache.pre_activations[-1].shape,
                                    got=grad.shape)
        grads: List[np.ndarray] = []
        last = len(self.weights) - 1
        for k in range(last, -1, -1):
            if k != last:
                grad = grad * (cache.pre_activations[k] > 0.0)
            grads.append(grad.sum(axis=0))
            grads.append(cache.inputs[k].T @ grad)
            grad = grad @ self.weights[k].T
        grads.reverse()
        return grads, (grad[0] if cache.squeeze else grad)

    def copy(self) -> 'Mlp':
        return Mlp(self.sizes, weights=[w.copy() for w in self.weights], biases=[b.copy() for b in self.biases])

    def load_parameters(self, source: 'Mlp'):
        if source.sizes != self.sizes:
            raise ContractViolation("Cannot copy parameters between different widths",
                                    source=source.sizes, target=self.sizes)
        for target, value in zip(self.parameters(), source.parameters()):
            target[...] = value

    def polyak_update(self, source: 'Mlp', polyak: float):
        """theta <- polyak * theta + (1 - polyak) * theta_source, in place."""
        for target, value in zip(self.parameters(), source.parameters()):
            target *= polyak
            target += (1.0 - polyak) * value
