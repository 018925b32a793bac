"""Pushforward samplers: wrap a net into a map from base noise to samples.

Three variants:

* Steady:               x = net(r)
* SqrtTime:             x = x0 + sqrt(t) * net(t, [x0,] r)
* GaussianIcLinearTime: x = (mu0 + sigma0 * z(r)) + t * net(t, r)

SqrtTime pins the initial condition exactly (t = 0 gives x0 bit-for-bit)
and matches the sqrt-in-time growth of diffusive displacements, so the net
only has to learn a smooth correction. GaussianIcLinearTime pins a Gaussian
initial law N(mu0, sigma0^2 I) exactly by taking z(r) as the first output-
dimension-many coordinates of a standard-normal base draw; z is fixed, not
trained, which is what makes the t = 0 law exact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import nn
from .errors import ConfigError, ShapeError

Array = np.ndarray


class BaseKind(Enum):
    UNIFORM_UNIT = "uniform"
    STANDARD_NORMAL = "normal"


class MapVariant(Enum):
    STEADY = "steady"
    SQRT_TIME = "sqrt_time"
    GAUSSIAN_IC_LINEAR_TIME = "gaussian_ic"


@dataclass(frozen=True)
class BaseDistribution:
    kind: BaseKind
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("base dimension must be >= 1")


def sample_base(base: BaseDistribution, M: int, rng: np.random.Generator) -> Array:
    if base.kind is BaseKind.UNIFORM_UNIT:
        return rng.random((M, base.d))
    return rng.standard_normal((M, base.d))


@dataclass
class PushforwardMap:
    variant: MapVariant
    net: nn.FeedforwardNet
    base: BaseDistribution
    n: int
    mu0: Optional[Array] = None       # GaussianIcLinearTime only
    sigma0: Optional[float] = None
    concat_x0: bool = False           # SqrtTime: feed x0 into the net input

    def __post_init__(self):
        expected = self.expected_net_in_dim()
        if self.net.in_dim != expected:
            raise ConfigError(
                f"net in_dim {self.net.in_dim} != required {expected} for {self.variant.value}"
            )
        if self.net.out_dim != self.n:
            raise ConfigError(f"net out_dim {self.net.out_dim} != target dimension {self.n}")
        if self.variant is MapVariant.GAUSSIAN_IC_LINEAR_TIME:
            if self.mu0 is None or self.sigma0 is None:
                raise ConfigError("gaussian_ic variant needs mu0 and sigma0")
            if self.base.kind is not BaseKind.STANDARD_NORMAL or self.base.d < self.n:
                raise ConfigError("gaussian_ic variant needs a standard-normal base with d >= n")

    def expected_net_in_dim(self) -> int:
        if self.variant is MapVariant.STEADY:
            return self.base.d
        if self.variant is MapVariant.SQRT_TIME:
            return 1 + (self.n if self.concat_x0 else 0) + self.base.d
        return 1 + self.base.d

    def param_vector(self) -> Array:
        return self.net.param_vector()

    def with_params(self, flat: Array) -> "PushforwardMap":
        return replace(self, net=self.net.with_params(flat))


@dataclass
class PushAux:
    """Chain-rule factors cached by push_time for backprop."""

    scale: Array  # (M,): sqrt(t) or t multiplying the net output


def push_steady(pm: PushforwardMap, r_batch: Array) -> tuple[Array, nn.ForwardTape]:
    if pm.variant is not MapVariant.STEADY:
        raise ConfigError("push_steady requires the steady variant")
    return nn.forward(pm.net, r_batch)


def push_time(
    pm: PushforwardMap, t_batch: Array, x0_batch: Array, r_batch: Array
) -> tuple[Array, nn.ForwardTape, PushAux]:
    """Map (t, x0, r) batches to samples; lengths must agree, t >= 0."""
    t = np.asarray(t_batch, dtype=np.float64)
    x0 = np.asarray(x0_batch, dtype=np.float64)
    r = np.asarray(r_batch, dtype=np.float64)
    M = r.shape[0]
    if t.shape != (M,) or x0.shape != (M, pm.n):
        raise ShapeError("t, x0 and r batch lengths must agree")
    if np.any(t < 0):
        raise ConfigError("negative times are outside the problem domain")
    if pm.variant is MapVariant.SQRT_TIME:
        cols = [t[:, None]] + ([x0] if pm.concat_x0 else []) + [r]
        out, tape = nn.forward(pm.net, np.concatenate(cols, axis=1))
        scale = np.sqrt(t)
        return x0 + scale[:, None] * out, tape, PushAux(scale)
    if pm.variant is MapVariant.GAUSSIAN_IC_LINEAR_TIME:
        out, tape = nn.forward(pm.net, np.concatenate([t[:, None], r], axis=1))
        start = pm.mu0[None, :] + pm.sigma0 * r[:, : pm.n]
        return start + t[:, None] * out, tape, PushAux(t.copy())
    raise ConfigError("push_time requires a time-dependent variant")


def backprop_through_push(
    pm: PushforwardMap, tape: nn.ForwardTape, aux: Optional[PushAux], x_cotangents: Array
) -> Array:
    """Flat parameter cotangent of the push output, given dLoss/dx.

    Time variants scale the cotangent by the cached sqrt(t) / t factor; the
    x0 and z(r) paths carry no trainable parameters. Input cotangents are
    discarded (nothing upstream of the base draw is trained).
    """
    cot = np.asarray(x_cotangents, dtype=np.float64)
    if pm.variant is not MapVariant.STEADY:
        if aux is None:
            raise ShapeError("time variants need the aux factors from push_time")
        cot = aux.scale[:, None] * cot
    grad, _ = nn.vjp(pm.net, tape, cot)
    return grad
