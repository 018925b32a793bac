"""Adam and plain SGD updaters over flat parameter vectors.

Both support sign-controlled steps so the same code drives the minimizing
generator and the maximizing adversary. A learning rate of zero is allowed
and makes the step a no-op (useful for frozen components).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, ContractError


class Direction(Enum):
    DESCENT = "descent"
    ASCENT = "ascent"


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> "AdamState":
        if lr < 0:
            raise ConfigError("learning rate must be >= 0")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ConfigError("betas must lie in [0, 1)")
        if eps <= 0:
            raise ConfigError("eps must be > 0")
        return cls(np.zeros(n_params), np.zeros(n_params), 0, lr, beta1, beta2, eps)


@dataclass
class SgdState:
    lr: float

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError("learning rate must be >= 0")


def adam_step(
    params: np.ndarray, grad: np.ndarray, state: AdamState, direction: Direction
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; Ascent negates the applied step."""
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise ContractError("params, grad and optimizer state lengths must match")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    step = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if direction is Direction.ASCENT:
        step = -step
    return params - step, replace(state, m=m, v=v, t=t)


def sgd_step(
    params: np.ndarray, grad: np.ndarray, state: SgdState, direction: Direction
) -> np.ndarray:
    if params.shape != grad.shape:
        raise ContractError("params and grad lengths must match")
    if direction is Direction.ASCENT:
        return params + state.lr * grad
    return params - state.lr * grad


def clip_by_norm(grad: np.ndarray, max_norm: float) -> np.ndarray:
    """Rescale grad to euclidean norm max_norm when it exceeds it."""
    norm = float(np.linalg.norm(grad))
    if norm > max_norm > 0:
        return grad * (max_norm / norm)
    return grad
