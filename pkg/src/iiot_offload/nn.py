"""Dense networks with hand-written reverse mode, plus Adam.

Everything is float64 numpy; parameters are kept as a flat list
``[W0, b0, W1, b1, ...]`` with ``W`` of shape ``(fan_in, fan_out)``.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda y: 1.0 - y * y),
    "identity": (lambda x: x, lambda y: np.ones_like(y)),
}


class MLP:
    """Fully connected network: hidden layers use ``activation``, the output is affine.

    Parameters
    ----------
    sizes : sequence of int
        ``(input, hidden..., output)``.
    activation : str
        ``"tanh"`` or ``"identity"``.
    rng : numpy Generator, optional
        Source for the Glorot-uniform initialisation.
    out_scale : float
        Multiplier on the last layer's initial weights; small values start an
        actor close to the uniform policy.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        activation: str = "tanh",
        rng: Optional[np.random.Generator] = None,
        out_scale: float = 1.0,
    ):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least an input and an output size")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.activation = activation
        rng = np.random.default_rng() if rng is None else rng
        self.params: list[np.ndarray] = []
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            if i == n_layers - 1:
                w *= out_scale
            self.params += [w, np.zeros(fan_out)]

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"input dimension {x.shape[-1]} does not match network input {self.sizes[0]}")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cache(x)[0]

    __call__ = forward

    def forward_cache(self, x: np.ndarray):
        act, _ = _ACTIVATIONS[self.activation]
        h = self._check(x)
        cache = [h]
        for i in range(self.n_layers):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            h = h @ w + b
            if i < self.n_layers - 1:
                h = act(h)
            cache.append(h)
        return h, cache

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of ``sum(grad_out * output)`` w.r.t. every parameter."""
        _, dact = _ACTIVATIONS[self.activation]
        grads: list[np.ndarray] = [None] * len(self.params)
        g = np.asarray(grad_out, dtype=float)
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                g = g * dact(cache[i + 1])
            x = cache[i]
            grads[2 * i] = x.reshape(-1, x.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            grads[2 * i + 1] = g.reshape(-1, g.shape[-1]).sum(axis=0)
            if i > 0:
                g = g @ self.params[2 * i].T
        return grads

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.params:
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size


def clip_grad_norm(grads: list[np.ndarray], max_norm: Optional[float]) -> tuple[list[np.ndarray], float]:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-5):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
