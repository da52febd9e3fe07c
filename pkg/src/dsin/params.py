"""Named parameter sets and initializers."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, matmul, relu


class ParameterError(KeyError):
    pass


class ModelParams(dict):
    """Ordered ``name -> Tensor`` map holding every trainable array of a model."""

    def __init__(self, rng: np.random.Generator | None = None):
        super().__init__()
        self.rng = rng or np.random.default_rng(0)

    def new(self, name: str, data) -> Tensor:
        if name in self:
            raise ParameterError(f"duplicate parameter {name!r}")
        t = Tensor(data, requires_grad=True, name=name)
        self[name] = t
        return t

    def glorot(self, name: str, shape: tuple) -> Tensor:
        fan_in, fan_out = shape[-2], shape[-1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return self.new(name, self.rng.uniform(-limit, limit, size=shape))

    def zeros(self, name: str, shape) -> Tensor:
        return self.new(name, np.zeros(shape))

    def full(self, name: str, shape, value: float) -> Tensor:
        return self.new(name, np.full(shape, float(value)))

    def zero_grad(self) -> None:
        for t in self.values():
            t.grad = None

    def state(self) -> dict:
        return {name: t.data.copy() for name, t in self.items()}

    def load_state(self, state: dict) -> None:
        for name, t in self.items():
            if name not in state:
                raise ParameterError(f"missing parameter {name!r}")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != t.shape:
                raise ParameterError(f"parameter {name!r} has shape {value.shape}, expected {t.shape}")
            t.data = value.copy()

    def count(self) -> int:
        return sum(t.data.size for t in self.values())


def make_mlp(params: ModelParams, prefix: str, widths: list) -> list:
    layers = []
    for i, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append((params.glorot(f"{prefix}.w{i}", (n_in, n_out)),
                       params.zeros(f"{prefix}.b{i}", (n_out,))))
    return layers


def mlp_forward(x: Tensor, layers: list) -> Tensor:
    """Affine layers with ReLU between them; the last layer stays linear."""
    for i, (w, b) in enumerate(layers):
        x = matmul(x, w) + b
        if i < len(layers) - 1:
            x = relu(x)
    return x
