from __future__ import annotations

from typing import List, Sequence, Union

import numpy as np
from aenum import IntEnum

from ..errors import ConfigError


class OptimizerKind(IntEnum):
    _init_ = "value display"

    SGD = 1, "sgd"
    MOMENTUM = 2, "momentum"
    ADAM = 3, "adam"

    @classmethod
    def parse(cls, value) -> OptimizerKind:
        if isinstance(value, cls):
            return value
        for kind in cls:
            if kind.display == str(value).lower():
                return kind
        raise ConfigError(f'unknown optimizer "{value}", expected one of {", ".join(k.display for k in cls)}')


class Optimizer:
    """
    Updates a fixed list of parameter arrays in place from congruent gradients.
    The learning rate is one float or one float per parameter array.
    """

    def __init__(self, params: Sequence[np.ndarray], learning_rate: Union[float, Sequence[float]]):
        self.params: List[np.ndarray] = list(params)
        if np.ndim(learning_rate) == 0:
            self.rates = [float(learning_rate)] * len(self.params)
        else:
            self.rates = [float(r) for r in learning_rate]
        if len(self.rates) != len(self.params):
            raise ConfigError(f"got {len(self.rates)} learning rates for {len(self.params)} parameter arrays")

    def step(self, grads: Sequence[np.ndarray]):
        for p, rate, g in zip(self.params, self.rates, grads):
            p -= rate * g


class MomentumOptimizer(Optimizer):
    def __init__(self, params, learning_rate, momentum: float = 0.9):
        super().__init__(params, learning_rate)
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        for p, rate, v, g in zip(self.params, self.rates, self.velocity, grads):
            v *= self.momentum
            v -= rate * g
            p += v


class AdamOptimizer(Optimizer):
    def __init__(self, params, learning_rate, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(params, learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self.first = [np.zeros_like(p) for p in self.params]
        self.second = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        self.steps += 1
        c1 = 1 - self.beta1**self.steps
        c2 = 1 - self.beta2**self.steps
        for p, rate, m, v, g in zip(self.params, self.rates, self.first, self.second, grads):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(
    kind: OptimizerKind, params, learning_rate: Union[float, Sequence[float]], momentum: float = 0.9
) -> Optimizer:
    if kind == OptimizerKind.SGD:
        return Optimizer(params, learning_rate)
    elif kind == OptimizerKind.MOMENTUM:
        return MomentumOptimizer(params, learning_rate, momentum)
    else:
        return AdamOptimizer(params, learning_rate)
