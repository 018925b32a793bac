"""Fokker-Planck problem definitions: drift, diffusion, references.

Operator convention used throughout the package: the adjoint operator acting
on test functions is

    Lf = -1/2 sum_ij a_ij d2f/dx_i dx_j - sum_i b_i df/dx_i

and each built-in problem's diffusion tensor A is fixed so that its stated
ground-truth density is exactly stationary under this operator. For the
gradient-drift problems with isotropic noise that means A = sigma^2 * I and
the stationary density is proportional to exp(-2 V / sigma^2). The matching
SDE is dX = b dt + S dW with S S^T = A.

Diffusion tensors are structure-tagged so the quadratic form w^T A w and its
contractions cost O(n) for isotropic/diagonal structure and O(n^2) only for
dense tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .rng import derive_rng

Array = np.ndarray


# --- structure-tagged diffusion tensors ---------------------------------


@dataclass(frozen=True)
class IsotropicDiffusion:
    """A = c * I; c scalar, or (M,) when state-dependent."""

    c: float | Array

    def quad_form(self, W: Array) -> Array:
        # w^T A w = c |w|^2; returns (K,) for constant c, (M, K) otherwise
        q = np.sum(W * W, axis=1)
        c = np.asarray(self.c)
        if c.ndim == 0:
            return float(c) * q
        return c[:, None] * q[None, :]

    def weighted_aw_by_sample(self, S: Array, W: Array) -> Array:
        # row m of the result is sum_k S[m,k] * (A_m w_k); (M, n)
        out = S @ W
        c = np.asarray(self.c)
        return out * (float(c) if c.ndim == 0 else c[:, None])

    def weighted_aw_by_wave(self, S: Array, W: Array) -> Array:
        # row k of the result is sum_m S[m,k] * (A_m w_k); (K, n)
        c = np.asarray(self.c)
        if c.ndim == 0:
            return float(c) * S.sum(axis=0)[:, None] * W
        return (S * c[:, None]).sum(axis=0)[:, None] * W

    def factor_matvec(self, xi: Array) -> Array:
        # S xi with S S^T = A: sqrt(c) * xi
        c = np.asarray(self.c)
        root = np.sqrt(float(c)) if c.ndim == 0 else np.sqrt(c)[:, None]
        return root * xi


@dataclass(frozen=True)
class DiagonalDiffusion:
    """A = diag(d); d is (n,) or (M, n)."""

    d: Array

    def quad_form(self, W: Array) -> Array:
        d = np.asarray(self.d)
        if d.ndim == 1:
            return W * W @ d
        return d @ (W * W).T

    def weighted_aw_by_sample(self, S: Array, W: Array) -> Array:
        d = np.asarray(self.d)
        return (S @ W) * (d[None, :] if d.ndim == 1 else d)

    def weighted_aw_by_wave(self, S: Array, W: Array) -> Array:
        d = np.asarray(self.d)
        if d.ndim == 1:
            return S.sum(axis=0)[:, None] * W * d[None, :]
        return (S.T @ d) * W

    def factor_matvec(self, xi: Array) -> Array:
        d = np.asarray(self.d)
        return np.sqrt(d)[None, :] * xi if d.ndim == 1 else np.sqrt(d) * xi


@dataclass(frozen=True)
class DenseDiffusion:
    """Full symmetric tensor; (n, n) or (M, n, n)."""

    a: Array

    def quad_form(self, W: Array) -> Array:
        a = np.asarray(self.a)
        if a.ndim == 2:
            return np.einsum("ki,ij,kj->k", W, a, W)
        return np.einsum("mij,ki,kj->mk", a, W, W)

    def weighted_aw_by_sample(self, S: Array, W: Array) -> Array:
        a = np.asarray(self.a)
        sw = S @ W
        if a.ndim == 2:
            return sw @ a.T
        return np.einsum("mij,mj->mi", a, sw)

    def weighted_aw_by_wave(self, S: Array, W: Array) -> Array:
        a = np.asarray(self.a)
        if a.ndim == 2:
            return (S.sum(axis=0)[:, None] * W) @ a.T
        return np.einsum("mk,mij,kj->ki", S, a, W)

    def factor_matvec(self, xi: Array) -> Array:
        raise ConfigError("dense diffusion has no fast factor; not supported by the SDE oracle")


Diffusion = IsotropicDiffusion | DiagonalDiffusion | DenseDiffusion


# --- analytical references ----------------------------------------------


@dataclass(frozen=True)
class BoltzmannReference:
    """Unnormalized stationary density exp(-2 V(x) / sigma^2)."""

    potential: Callable[[Array], Array]  # (P, n) -> (P,)
    sigma: float

    def unnormalized_density(self, X: Array) -> Array:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.exp(-2.0 * self.potential(X) / self.sigma**2)


@dataclass(frozen=True)
class GaussianMomentsReference:
    """Exact per-dimension mean m(t) and shared variance v(t)."""

    mean_fn: Callable[[float], Array]    # t -> (n,)
    var_fn: Callable[[float], float]

    def moments(self, t: float) -> tuple[Array, float]:
        return np.asarray(self.mean_fn(t), dtype=np.float64), float(self.var_fn(t))


AnalyticalReference = BoltzmannReference | GaussianMomentsReference


def eval_reference_density(ref: AnalyticalReference, X: Array) -> Array:
    if not isinstance(ref, BoltzmannReference):
        raise ConfigError("reference has no density form")
    return ref.unnormalized_density(X)


def eval_reference_moments(ref: AnalyticalReference, t: float) -> tuple[Array, float]:
    if not isinstance(ref, GaussianMomentsReference):
        raise ConfigError("reference has no moment form")
    return ref.moments(t)


# --- problem bundle -------------------------------------------------------


@dataclass(frozen=True)
class FpeProblem:
    name: str
    n: int
    time_dependent: bool
    drift: Callable[[float | Array, Array], Array]             # (t, X(M,n)) -> (M,n)
    drift_jacobian: Callable[[float | Array, Array], Array]    # -> (M,n,n), J[m,i,j]=db_i/dx_j
    diffusion: Callable[[float | Array, Array], Diffusion]
    # (t, X, j) -> dA/dx_j with the same structure tag, or None when A is constant
    diffusion_spatial_derivative: Optional[Callable[[float | Array, Array, int], Optional[Diffusion]]] = None
    horizon: Optional[float] = None
    initial_sampler: Optional[Callable[[int, np.random.Generator], Array]] = None
    reference: Optional[AnalyticalReference] = None


# --- built-in problems ----------------------------------------------------


def make_ou_1d() -> FpeProblem:
    """1D Ornstein-Uhlenbeck: b(x) = -(x - 2), A = 2; stationary N(2, 1)."""
    theta, mu, sigma = 1.0, 2.0, np.sqrt(2.0)

    def drift(t, X):
        return -theta * (X - mu)

    def jac(t, X):
        M = X.shape[0]
        return np.broadcast_to(-theta * np.eye(1), (M, 1, 1))

    def potential(X):
        return 0.5 * theta * (X[:, 0] - mu) ** 2

    return FpeProblem(
        name="ou1d", n=1, time_dependent=False,
        drift=drift, drift_jacobian=jac,
        diffusion=lambda t, X: IsotropicDiffusion(sigma**2),
        reference=BoltzmannReference(potential, sigma),
    )


def make_double_well_1d() -> FpeProblem:
    """Double well V = (x^2-1)^2, b = -4x^3 + 4x, sigma = 0.6."""
    sigma = 0.6

    def drift(t, X):
        x = X[:, 0]
        return (-4.0 * x**3 + 4.0 * x)[:, None]

    def jac(t, X):
        x = X[:, 0]
        return (-12.0 * x**2 + 4.0)[:, None, None]

    def potential(X):
        return (X[:, 0] ** 2 - 1.0) ** 2

    return FpeProblem(
        name="dwell1d", n=1, time_dependent=False,
        drift=drift, drift_jacobian=jac,
        diffusion=lambda t, X: IsotropicDiffusion(sigma**2),
        reference=BoltzmannReference(potential, sigma),
    )


def make_double_peak_2d() -> FpeProblem:
    """2D double peak: V = [(x1-1)^2+(x2-1)^2][(x1+1)^2+(x2+1)^2], sigma = 0.4."""
    sigma = 0.4

    def _parts(X):
        sm = (X[:, 0] - 1.0) ** 2 + (X[:, 1] - 1.0) ** 2
        sp = (X[:, 0] + 1.0) ** 2 + (X[:, 1] + 1.0) ** 2
        return sm, sp

    def potential(X):
        sm, sp = _parts(X)
        return sm * sp

    def drift(t, X):
        sm, sp = _parts(X)
        b = np.empty_like(X)
        for i in range(2):
            b[:, i] = -2.0 * (X[:, i] - 1.0) * sp - 2.0 * (X[:, i] + 1.0) * sm
        return b

    def jac(t, X):
        sm, sp = _parts(X)
        M = X.shape[0]
        J = np.empty((M, 2, 2))
        for i in range(2):
            for j in range(2):
                J[:, i, j] = (
                    -4.0 * (X[:, i] - 1.0) * (X[:, j] + 1.0)
                    - 4.0 * (X[:, i] + 1.0) * (X[:, j] - 1.0)
                )
                if i == j:
                    J[:, i, j] += -2.0 * (sp + sm)
        return J

    return FpeProblem(
        name="dpeak2d", n=2, time_dependent=False,
        drift=drift, drift_jacobian=jac,
        diffusion=lambda t, X: IsotropicDiffusion(sigma**2),
        reference=BoltzmannReference(potential, sigma),
    )


def make_ring_2d() -> FpeProblem:
    """Ring potential V = (r^2 - 4)^2 / 4 plus divergence-free rotation
    omega * (-x2, x1); r0 = 2, omega = 2, sigma = 1. The radial drift is
    -grad V = -(r^2 - r0^2) x, which keeps exp(-2V/sigma^2) stationary."""
    r0, omega, sigma = 2.0, 2.0, 1.0

    def potential(X):
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        return 0.25 * (r2 - r0**2) ** 2

    def drift(t, X):
        r2 = (X[:, 0] ** 2 + X[:, 1] ** 2)[:, None]
        radial = -(r2 - r0**2) * X
        tangent = omega * np.stack([-X[:, 1], X[:, 0]], axis=1)
        return radial + tangent

    def jac(t, X):
        M = X.shape[0]
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        J = np.empty((M, 2, 2))
        for i in range(2):
            for j in range(2):
                J[:, i, j] = -2.0 * X[:, i] * X[:, j]
                if i == j:
                    J[:, i, j] += -(r2 - r0**2)
        J[:, 0, 1] += -omega
        J[:, 1, 0] += omega
        return J

    return FpeProblem(
        name="ring2d", n=2, time_dependent=False,
        drift=drift, drift_jacobian=jac,
        diffusion=lambda t, X: IsotropicDiffusion(sigma**2),
        reference=BoltzmannReference(potential, sigma),
    )


def make_ou_time(
    n: int,
    mu0: Array,
    theta: float = 1.0,
    sigma: float = 1.0,
    sigma0: float = 0.5,
    horizon: float = 1.0,
) -> FpeProblem:
    """Time-dependent OU relaxation from N(mu0, sigma0^2 I) toward
    N(0, sigma^2/(2 theta) I); exact moments m_i(t) = mu0_i e^{-theta t},
    v(t) = sigma0^2 e^{-2 theta t} + sigma^2/(2 theta) (1 - e^{-2 theta t})."""
    mu0 = np.asarray(mu0, dtype=np.float64)
    if mu0.shape != (n,):
        raise ConfigError(f"mu0 must have shape ({n},), got {mu0.shape}")

    def drift(t, X):
        return -theta * X

    def jac(t, X):
        M = X.shape[0]
        return np.broadcast_to(-theta * np.eye(n), (M, n, n))

    def mean_fn(t):
        return mu0 * np.exp(-theta * t)

    def var_fn(t):
        eq = sigma**2 / (2.0 * theta)
        return sigma0**2 * np.exp(-2.0 * theta * t) + eq * (1.0 - np.exp(-2.0 * theta * t))

    def initial_sampler(M, rng):
        return mu0[None, :] + sigma0 * rng.standard_normal((M, n))

    return FpeProblem(
        name=f"outime{n}d", n=n, time_dependent=True,
        drift=drift, drift_jacobian=jac,
        diffusion=lambda t, X: IsotropicDiffusion(sigma**2),
        horizon=horizon,
        initial_sampler=initial_sampler,
        reference=GaussianMomentsReference(mean_fn, var_fn),
    )


OU10_MU0 = np.array([3.0, -2.5, 2.0, -3.5, 1.5, -1.0, 2.5, -2.0, 3.5, -1.5])


def _make_outime_1d() -> FpeProblem:
    return make_ou_time(1, np.array([3.0]))


def _make_outime_10d() -> FpeProblem:
    return make_ou_time(10, OU10_MU0)


def _make_outime_100d() -> FpeProblem:
    # initial means drawn once from N(0, 4) with a pinned stream
    mu0 = derive_rng(0, "outime100d-mu0").normal(0.0, 2.0, size=100)
    return make_ou_time(100, mu0)


_BUILTINS: dict[str, Callable[[], FpeProblem]] = {
    "ou1d": make_ou_1d,
    "dwell1d": make_double_well_1d,
    "dpeak2d": make_double_peak_2d,
    "ring2d": make_ring_2d,
    "outime1d": _make_outime_1d,
    "outime10d": _make_outime_10d,
    "outime100d": _make_outime_100d,
}

_CUSTOM: dict[str, Callable[[], FpeProblem]] = {}


def register_problem(problem_id: str, factory: Callable[[], FpeProblem]) -> None:
    """Register a custom problem factory under an id usable in configs."""
    if problem_id in _BUILTINS:
        raise ConfigError(f"cannot shadow built-in problem id {problem_id!r}")
    _CUSTOM[problem_id] = factory


def problem_ids() -> list[str]:
    return sorted(_BUILTINS) + sorted(_CUSTOM)


def make_problem(problem_id: str) -> FpeProblem:
    factory = _BUILTINS.get(problem_id) or _CUSTOM.get(problem_id)
    if factory is None:
        raise ConfigError(
            f"unknown problem id {problem_id!r}; valid ids: {', '.join(problem_ids())}"
        )
    return factory()
