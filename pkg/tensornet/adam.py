from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from errors import ConfigError


@dataclass(frozen=True)
class AdamHyper:
    lr0: float = 0.005
    batch_size: int = 4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    decay: float = 0.01
    epochs: int = 400

    def validate(self) -> None:
        if self.lr0 <= 0:
            raise ConfigError("lr0 must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.decay < 0:
            raise ConfigError("decay must be >= 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")

    @property
    def base_rate(self) -> float:
        return self.lr0 / self.batch_size

    def learning_rate(self, t: int) -> float:
        return self.base_rate / (1.0 + self.decay * t)


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    hyper: AdamHyper,
    t: int,
) -> dict[str, np.ndarray]:
    """One bias-corrected Adam update with decayed rate; params are updated in place."""
    if t < 1:
        raise ValueError("t must be >= 1")
    lr = hyper.learning_rate(t)
    correction1 = 1.0 - hyper.beta1**t
    correction2 = 1.0 - hyper.beta2**t
    for name, value in params.items():
        grad = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1.0 - hyper.beta1) * grad if m is None else hyper.beta1 * m + (1.0 - hyper.beta1) * grad
        v = (1.0 - hyper.beta2) * grad**2 if v is None else hyper.beta2 * v + (1.0 - hyper.beta2) * grad**2
        state.m[name] = m
        state.v[name] = v
        value -= lr * (m / correction1) / (np.sqrt(v / correction2) + hyper.epsilon)
    state.t = t
    return params
