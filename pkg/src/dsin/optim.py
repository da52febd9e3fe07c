"""Adam with bias correction; embedding padding rows are never updated."""

from __future__ import annotations

import numpy as np

from .params import ModelParams


class Adam:
    def __init__(self, params: ModelParams, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = {name: np.zeros(t.shape) for name, t in params.items()}
        self.v = {name: np.zeros(t.shape) for name, t in params.items()}

    def step(self) -> None:
        self.step_count += 1
        c1 = 1.0 - self.beta1 ** self.step_count
        c2 = 1.0 - self.beta2 ** self.step_count
        for name, t in self.params.items():
            g = t.grad
            if g is None:
                continue
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            if name.startswith("emb."):
                update[0] = 0.0
            t.data -= update

