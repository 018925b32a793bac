"""Dense feedforward networks with explicit forward and reverse passes.

This is the only differentiation engine in the package. Reverse mode is
restricted to vector-Jacobian products through stacks of affine+activation
layers; the cotangent seeds are supplied in closed form by the test-function
module, so no general tape/graph machinery is needed. All arithmetic is
float64 — the gradient-check tolerances used in the test suite are not
reachable in float32.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, ContractError, InputError, ShapeError
from .rng import derive_rng


class Activation(Enum):
    TANH = "tanh"
    SILU = "silu"
    SINE = "sine"
    IDENTITY = "identity"


class InitScheme(Enum):
    XAVIER_UNIFORM = "xavier_uniform"
    SCALED_NORMAL = "scaled_normal"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # evaluate on the stable branch per sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activate(act: Activation, z: np.ndarray) -> np.ndarray:
    if act is Activation.TANH:
        return np.tanh(z)
    if act is Activation.SILU:
        return z * _sigmoid(z)
    if act is Activation.SINE:
        return np.sin(z)
    return z


def activate_deriv(act: Activation, z: np.ndarray) -> np.ndarray:
    if act is Activation.TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    if act is Activation.SILU:
        # silu'(z) = sigma(z) * (1 + z * (1 - sigma(z)))
        s = _sigmoid(z)
        return s * (1.0 + z * (1.0 - s))
    if act is Activation.SINE:
        return np.cos(z)
    return np.ones_like(z)


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: Activation

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError(f"layer dims must be >= 1, got ({self.in_dim}, {self.out_dim})")


def validate_specs(specs: list[LayerSpec]) -> None:
    if not specs:
        raise ConfigError("network needs at least one layer")
    for a, b in zip(specs, specs[1:]):
        if a.out_dim != b.in_dim:
            raise ConfigError(
                f"layer dims do not chain: out_dim {a.out_dim} feeds in_dim {b.in_dim}"
            )


def mlp_specs(sizes: list[int], activation: Activation) -> list[LayerSpec]:
    """Layer specs for sizes like (1, 10, 10, 1): hidden layers use
    `activation`, the output layer is linear."""
    if len(sizes) < 2:
        raise ConfigError("need at least input and output sizes")
    specs = []
    for i, (a, b) in enumerate(zip(sizes, sizes[1:])):
        act = activation if i < len(sizes) - 2 else Activation.IDENTITY
        specs.append(LayerSpec(a, b, act))
    return specs


@dataclass(frozen=True)
class ParamLayout:
    """Offsets of each layer's weight and bias block in the flat vector."""

    shapes: tuple[tuple[int, int], ...]
    w_offsets: tuple[int, ...]
    b_offsets: tuple[int, ...]
    size: int

    @classmethod
    def from_specs(cls, specs: list[LayerSpec]) -> "ParamLayout":
        shapes, w_off, b_off = [], [], []
        pos = 0
        for s in specs:
            shapes.append((s.out_dim, s.in_dim))
            w_off.append(pos)
            pos += s.out_dim * s.in_dim
            b_off.append(pos)
            pos += s.out_dim
        return cls(tuple(shapes), tuple(w_off), tuple(b_off), pos)

    def flatten(self, weights: list[np.ndarray], biases: list[np.ndarray]) -> np.ndarray:
        flat = np.empty(self.size)
        for (o, i), wo, bo, W, b in zip(self.shapes, self.w_offsets, self.b_offsets, weights, biases):
            flat[wo:wo + o * i] = W.ravel()
            flat[bo:bo + o] = b
        return flat

    def unflatten(self, flat: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        if flat.shape != (self.size,):
            raise ShapeError(f"expected flat vector of length {self.size}, got {flat.shape}")
        weights, biases = [], []
        for (o, i), wo, bo in zip(self.shapes, self.w_offsets, self.b_offsets):
            weights.append(flat[wo:wo + o * i].reshape(o, i).copy())
            biases.append(flat[bo:bo + o].copy())
        return weights, biases


@dataclass
class FeedforwardNet:
    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]  # per layer, (out_dim, in_dim)
    biases: list[np.ndarray]   # per layer, (out_dim,)

    @property
    def in_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.specs[-1].out_dim

    @property
    def layout(self) -> ParamLayout:
        return ParamLayout.from_specs(list(self.specs))

    @property
    def n_params(self) -> int:
        return self.layout.size

    def param_vector(self) -> np.ndarray:
        return self.layout.flatten(self.weights, self.biases)

    def with_params(self, flat: np.ndarray) -> "FeedforwardNet":
        weights, biases = self.layout.unflatten(flat)
        return FeedforwardNet(self.specs, weights, biases)


@dataclass
class ForwardTape:
    """Recorded activations of one forward pass, consumed by vjp."""

    batch: np.ndarray                 # (M, in_dim)
    pre_acts: list[np.ndarray]        # per layer, (M, out_dim)
    post_acts: list[np.ndarray]       # per layer, (M, out_dim)

    @property
    def batch_size(self) -> int:
        return self.batch.shape[0]


def init_net(
    specs: list[LayerSpec],
    seed: int,
    scheme: InitScheme = InitScheme.XAVIER_UNIFORM,
    scale: float = 1.0,
) -> FeedforwardNet:
    """Deterministic initialization: weights per scheme, biases zero."""
    validate_specs(specs)
    rng = derive_rng(seed, "net-init")
    weights, biases = [], []
    for s in specs:
        if scheme is InitScheme.XAVIER_UNIFORM:
            bound = scale * np.sqrt(6.0 / (s.in_dim + s.out_dim))
            W = rng.uniform(-bound, bound, size=(s.out_dim, s.in_dim))
        else:
            W = rng.normal(0.0, 1.0, size=(s.out_dim, s.in_dim)) * (scale / np.sqrt(s.in_dim))
        weights.append(W)
        biases.append(np.zeros(s.out_dim))
    return FeedforwardNet(tuple(specs), weights, biases)


def forward(net: FeedforwardNet, batch: np.ndarray) -> tuple[np.ndarray, ForwardTape]:
    """Evaluate the net on a (M, in_dim) batch, recording a tape for vjp."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.in_dim:
        raise ShapeError(f"expected batch (M, {net.in_dim}), got {batch.shape}")
    if not np.all(np.isfinite(batch)):
        raise InputError("non-finite values in network input batch")
    a = batch
    pre, post = [], []
    for s, W, b in zip(net.specs, net.weights, net.biases):
        z = a @ W.T + b
        a = activate(s.activation, z)
        pre.append(z)
        post.append(a)
    return a, ForwardTape(batch, pre, post)


def vjp(
    net: FeedforwardNet, tape: ForwardTape, seed_cotangents: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse pass: contract output cotangents through the net's Jacobian.

    Returns (param_grad, input_cotangents) where param_grad is the flat
    cotangent accumulated over the batch (sum over rows) and
    input_cotangents has one row per batch row.
    """
    if len(tape.pre_acts) != len(net.specs):
        raise ContractError("tape layer count does not match net")
    for s, z in zip(net.specs, tape.pre_acts):
        if z.shape != (tape.batch_size, s.out_dim):
            raise ContractError("tape shapes do not match net layout")
    cot = np.asarray(seed_cotangents, dtype=np.float64)
    if cot.shape != (tape.batch_size, net.out_dim):
        raise ShapeError(
            f"expected cotangents ({tape.batch_size}, {net.out_dim}), got {cot.shape}"
        )
    grads_W: list[np.ndarray] = [None] * len(net.specs)  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * len(net.specs)  # type: ignore[list-item]
    delta = cot
    for l in range(len(net.specs) - 1, -1, -1):
        s = net.specs[l]
        if s.activation is Activation.IDENTITY:
            dz = delta
        else:
            dz = delta * activate_deriv(s.activation, tape.pre_acts[l])
        a_prev = tape.post_acts[l - 1] if l > 0 else tape.batch
        grads_W[l] = dz.T @ a_prev
        grads_b[l] = dz.sum(axis=0)
        delta = dz @ net.weights[l]
    param_grad = net.layout.flatten(grads_W, grads_b)
    return param_grad, delta


# --- text serialization ------------------------------------------------
#
# Format (one token group per line, 17 significant digits so float64
# round-trips exactly):
#   fpsampler-net 1
#   layers <L>
#   layer <in_dim> <out_dim> <activation>     (L lines)
#   then per layer: out_dim lines of in_dim weight entries (row-major),
#   followed by 1 line of out_dim bias entries.

_FMT = "%.17g"


def net_to_text(net: FeedforwardNet) -> str:
    lines = ["fpsampler-net 1", f"layers {len(net.specs)}"]
    for s in net.specs:
        lines.append(f"layer {s.in_dim} {s.out_dim} {s.activation.value}")
    for W, b in zip(net.weights, net.biases):
        for row in W:
            lines.append(" ".join(_FMT % x for x in row))
        lines.append(" ".join(_FMT % x for x in b))
    return "\n".join(lines) + "\n"


def net_from_text(text: str) -> FeedforwardNet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["fpsampler-net", "1"]:
        raise ConfigError("not a recognized net dump")
    n_layers = int(lines[1].split()[1])
    specs = []
    for ln in lines[2:2 + n_layers]:
        _, i, o, act = ln.split()
        specs.append(LayerSpec(int(i), int(o), Activation(act)))
    validate_specs(specs)
    pos = 2 + n_layers
    weights, biases = [], []
    for s in specs:
        W = np.array([[float(x) for x in lines[pos + r].split()] for r in range(s.out_dim)])
        pos += s.out_dim
        b = np.array([float(x) for x in lines[pos].split()])
        pos += 1
        if W.shape != (s.out_dim, s.in_dim) or b.shape != (s.out_dim,):
            raise ConfigError("net dump shapes do not match layer specs")
        weights.append(W)
        biases.append(b)
    return FeedforwardNet(tuple(specs), weights, biases)


def save_net(net: FeedforwardNet, path) -> None:
    with open(path, "w") as fh:
        fh.write(net_to_text(net))


def load_net(path) -> FeedforwardNet:
    with open(path) as fh:
        return net_from_text(fh.read())
