"""Multilayer perceptrons and the Adam optimizer on the autodiff tape.

Hidden layers use tanh, output layers are linear.  Weights initialize
uniformly in +-sqrt(6 / (fan_in + fan_out)) (the standard choice for tanh
networks), biases at zero; under a fixed seed the parameter blob is
byte-identical across runs.
"""

from __future__ import annotations

import numpy as np

from . import rng as rngmod
from .autodiff import Tensor, as_tensor
from .errors import ConfigError, ShapeError, TrainingError

__all__ = ["Mlp", "mlp_init", "mlp_forward", "AdamState", "adam_init", "adam_step"]


class Mlp:
    """Stack of (weight, bias) pairs; tanh between layers, identity at the end."""

    def __init__(self, layers: list[tuple[Tensor, Tensor]]):
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[1]

    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in self.layers:
            out.append(w)
            out.append(b)
        return out

    def num_params(self) -> int:
        return sum(p.size for p in self.parameters())

    def __call__(self, x) -> Tensor:
        return mlp_forward(self, x)


def mlp_init(layer_sizes: list[int], rng: np.random.Generator) -> Mlp:
    """Build an Mlp with the given layer widths, e.g. [1, 40, 40, 2]."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ConfigError(f"an Mlp needs at least input and output sizes, got {sizes}")
    if any(s <= 0 for s in sizes):
        raise ConfigError(f"layer sizes must be positive, got {sizes}")
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = (2.0 * rngmod.uniforms(rng, (fan_in, fan_out)) - 1.0) * bound
        layers.append((Tensor(w, requires_grad=True), Tensor(np.zeros(fan_out), requires_grad=True)))
    return Mlp(layers)


def mlp_forward(net: Mlp, x) -> Tensor:
    """Batched forward pass.  1-d inputs are treated as a single row."""
    x = as_tensor(x)
    squeeze = x.ndim == 1
    if squeeze:
        x = x.reshape(1, x.shape[0])
    if x.shape[-1] != net.in_dim:
        raise ShapeError(f"input has {x.shape[-1]} features, network expects {net.in_dim}")
    h = x
    last = len(net.layers) - 1
    for i, (w, b) in enumerate(net.layers):
        h = h @ w + b
        if i < last:
            h = h.tanh()
    return h.reshape(h.shape[1]) if squeeze else h


class AdamState:
    """First/second-moment accumulators plus the step counter."""

    def __init__(self, params, lr: float, beta1: float, beta2: float, eps: float):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_init(params, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(list(params), lr, beta1, beta2, eps)


def adam_step(params, grads, state: AdamState) -> None:
    """One bias-corrected Adam update, in place on the parameter tensors."""
    state.step += 1
    t = state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in parameter {i} at optimizer step {t}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / (1.0 - state.beta1**t)
        v_hat = state.v[i] / (1.0 - state.beta2**t)
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
