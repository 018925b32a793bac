"""Independent ground-truth engines used to validate trained samplers.

Nothing in here touches the training machinery: expectations come from
tensor-product Simpson quadrature against analytical reference densities,
and sample-based ground truth comes from Euler-Maruyama simulation of the
underlying SDE dX = b dt + S dW with S S^T = A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NumericError
from .problems import BoltzmannReference, FpeProblem
from .rng import derive_rng

Array = np.ndarray


@dataclass(frozen=True)
class EmConfig:
    dt: float
    steps: int
    particles: int
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.steps < 1 or self.particles < 1:
            raise ConfigError("dt must be > 0, steps and particles >= 1")

    @property
    def horizon(self) -> float:
        return self.dt * self.steps


def euler_maruyama(
    problem: FpeProblem,
    x0_batch: Array,
    cfg: EmConfig,
    snapshot_steps: Optional[list[int]] = None,
) -> tuple[Array, dict[int, Array]]:
    """Simulate all particles to the horizon; returns endpoints and any
    requested intermediate snapshots keyed by step index."""
    X = np.array(x0_batch, dtype=np.float64)
    if X.ndim != 2 or X.shape != (cfg.particles, problem.n):
        raise ConfigError(f"x0 batch must be ({cfg.particles}, {problem.n}), got {X.shape}")
    rng = derive_rng(cfg.seed, "em-noise")
    want = set(snapshot_steps or [])
    snapshots: dict[int, Array] = {}
    sqrt_dt = np.sqrt(cfg.dt)
    for k in range(cfg.steps):
        t = k * cfg.dt
        diff = problem.diffusion(t, X)
        xi = rng.standard_normal(X.shape)
        X = X + problem.drift(t, X) * cfg.dt + sqrt_dt * diff.factor_matvec(xi)
        if not np.all(np.isfinite(X)):
            raise NumericError(f"state became non-finite at step {k + 1}")
        if (k + 1) in want:
            snapshots[k + 1] = X.copy()
    return X, snapshots


# --- Simpson quadrature ---------------------------------------------------


@dataclass(frozen=True)
class QuadGrid:
    """Tensor-product grid; counts must be odd (composite Simpson)."""

    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.bounds) != len(self.counts):
            raise ConfigError("bounds and counts must have the same length")
        for m in self.counts:
            if m < 3 or m % 2 == 0:
                raise ConfigError(f"Simpson needs odd point counts >= 3, got {m}")

    @property
    def dim(self) -> int:
        return len(self.bounds)


def _axis_rule(lo: float, hi: float, m: int) -> tuple[Array, Array]:
    x = np.linspace(lo, hi, m)
    h = (hi - lo) / (m - 1)
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * (h / 3.0)


def grid_points_weights(grid: QuadGrid) -> tuple[Array, Array]:
    """Flattened (P, n) points and (P,) weights of the product rule."""
    axes = [_axis_rule(lo, hi, m) for (lo, hi), m in zip(grid.bounds, grid.counts)]
    mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    w = axes[0][1]
    for _, wi in axes[1:]:
        w = np.outer(w, wi).ravel()
    return pts, w


def simpson_integral(fn: Callable[[Array], Array], grid: QuadGrid) -> float:
    """Integral of fn over the grid box; fn maps (P, n) -> (P,)."""
    pts, w = grid_points_weights(grid)
    vals = np.asarray(fn(pts), dtype=np.float64)
    return float(w @ vals)


def simpson_expectation(
    fn: Callable[[Array], Array],
    density: Callable[[Array], Array],
    grid: QuadGrid,
) -> float:
    """E[fn] under the (possibly unnormalized) density restricted to the box."""
    pts, w = grid_points_weights(grid)
    rho = np.asarray(density(pts), dtype=np.float64)
    mass = float(w @ rho)
    if mass <= 0:
        raise NumericError("reference density has nonpositive mass on the grid")
    return float(w @ (np.asarray(fn(pts)) * rho)) / mass


# --- reference tables and quadrature defaults --------------------------------

# boxes sized to capture all but ~1e-10 of each problem's reference mass
DEFAULT_BOXES: dict[str, tuple[tuple[float, float], ...]] = {
    "ou1d": ((-3.0, 7.0),),
    "dwell1d": ((-3.0, 3.0),),
    "dpeak2d": ((-5.0, 5.0), (-5.0, 5.0)),
    "ring2d": ((-5.0, 5.0), (-5.0, 5.0)),
}


def default_grid(problem: FpeProblem, points_per_axis: int = 501) -> QuadGrid:
    box = DEFAULT_BOXES.get(problem.name)
    if box is None:
        box = tuple((-6.0, 6.0) for _ in range(problem.n))
    return QuadGrid(box, tuple(points_per_axis for _ in box))


def reference_table(
    problem: FpeProblem,
    grid: QuadGrid,
    functions: dict[str, Callable[[Array], Array]],
) -> dict[str, float]:
    """Simpson reference expectation per named function under the problem's
    Boltzmann reference density."""
    ref = problem.reference
    if not isinstance(ref, BoltzmannReference):
        raise ConfigError(f"problem {problem.name} has no density-form reference")
    return {
        name: simpson_expectation(fn, ref.unnormalized_density, grid)
        for name, fn in functions.items()
    }


def reference_quantile_fn(problem: FpeProblem, grid: QuadGrid) -> Callable[[Array], Array]:
    """Quantile function of a 1D Boltzmann reference via normalized CDF
    inversion on the grid (trapezoid accumulation, linear interpolation)."""
    if problem.n != 1:
        raise ConfigError("quantile inversion implemented for 1D only")
    ref = problem.reference
    pts, _ = grid_points_weights(grid)
    x = pts[:, 0]
    rho = ref.unnormalized_density(pts)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    # strictly increasing segments only, so interpolation is well posed
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return lambda q: np.interp(q, cdf[keep], x[keep])


def wasserstein1_vs_reference(samples: Array, problem: FpeProblem, grid: QuadGrid) -> float:
    """1-Wasserstein distance between a 1D empirical sample and the
    problem's reference law, via the quantile coupling."""
    qf = reference_quantile_fn(problem, grid)
    xs = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    N = xs.size
    q = (np.arange(N) + 0.5) / N
    return float(np.mean(np.abs(xs - qf(q))))
