"""Statistics over generated samples: moments, histograms, KDE, Monte
Carlo integration with standard errors, and error tables against
analytical references.

Variance is the population (1/N) convention throughout; at the sample
sizes used here the distinction from 1/(N-1) is far below every tolerance
in the validation suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import ConfigError, ShapeError
from .integrands import get_integrand
from .problems import GaussianMomentsReference
from .pushforward import MapVariant, PushforwardMap, push_steady, push_time, sample_base
from .rng import derive_rng

Array = np.ndarray


@dataclass
class MomentSummary:
    mean: Array          # (n,)
    variance: Array      # (n,), population convention
    mean_radius: float
    count: int


def moments(samples: Array) -> MomentSummary:
    X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if X.shape[0] < 1:
        raise ShapeError("need at least one sample")
    mean = X.mean(axis=0)
    var = X.var(axis=0)  # ddof=0
    radius = float(np.mean(np.linalg.norm(X, axis=1)))
    return MomentSummary(mean, var, radius, X.shape[0])


def pooled_moments(a: MomentSummary, b: MomentSummary) -> MomentSummary:
    """Exact moments of the concatenation, from the two summaries."""
    n = a.count + b.count
    wa, wb = a.count / n, b.count / n
    mean = wa * a.mean + wb * b.mean
    var = wa * (a.variance + (a.mean - mean) ** 2) + wb * (b.variance + (b.mean - mean) ** 2)
    radius = wa * a.mean_radius + wb * b.mean_radius
    return MomentSummary(mean, var, radius, n)


# --- Monte Carlo integration ---------------------------------------------


@dataclass
class McEstimate:
    function_id: str
    sizes: list[int]
    estimates: list[float]
    std_errors: list[float]


def generate_samples(
    pm: PushforwardMap, N: int, seed: int, t: Optional[float] = None,
    initial_sampler=None,
) -> Array:
    """Draw N samples from the map; time-dependent variants need the time
    and (for SqrtTime) the problem's initial sampler."""
    rng = derive_rng(seed, "sample")
    r = sample_base(pm.base, N, rng)
    if pm.variant is MapVariant.STEADY:
        X, _ = push_steady(pm, r)
        return X
    if t is None:
        raise ConfigError("time-dependent map needs a sample time")
    if pm.variant is MapVariant.SQRT_TIME:
        if initial_sampler is None:
            raise ConfigError("sqrt-time map needs the problem's initial sampler")
        x0 = initial_sampler(N, rng)
    else:
        x0 = np.zeros((N, pm.n))  # start is built from the base draw
    X, _, _ = push_time(pm, np.full(N, float(t)), x0, r)
    return X


def mc_integrate(pm: PushforwardMap, function_id: str, sizes: list[int], seed: int) -> McEstimate:
    """Nested MC estimates: larger sizes reuse the smaller draws' prefix,
    so the convergence curve reflects one growing sample stream."""
    fn = get_integrand(function_id)
    sizes = sorted(sizes)
    X = generate_samples(pm, sizes[-1], seed)
    vals = fn(X)
    ests, ses = [], []
    for N in sizes:
        prefix = vals[:N]
        ests.append(float(prefix.mean()))
        ses.append(float(prefix.std() / np.sqrt(N)))
    return McEstimate(function_id, sizes, ests, ses)


# --- histograms -------------------------------------------------------------


@dataclass
class RadialAngularHist:
    r_edges: Array
    r_mass: Array        # sums to 1
    theta_edges: Array
    theta_mass: Array    # sums to 1


def radial_angular(samples: Array, bins: int = 36) -> RadialAngularHist:
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ShapeError("radial/angular decomposition needs 2D samples")
    r = np.linalg.norm(X, axis=1)
    theta = np.arctan2(X[:, 1], X[:, 0])
    r_counts, r_edges = np.histogram(r, bins=bins, range=(0.0, max(r.max(), 1e-12)))
    t_counts, t_edges = np.histogram(theta, bins=bins, range=(-np.pi, np.pi))
    return RadialAngularHist(
        r_edges, r_counts / X.shape[0], t_edges, t_counts / X.shape[0]
    )


def angular_uniformity_pvalue(samples: Array, bins: int = 36) -> float:
    """Chi-squared test of angular uniformity over equal-width bins."""
    hist = radial_angular(samples, bins)
    counts = hist.theta_mass * len(samples)
    expected = len(samples) / bins
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    return float(stats.chi2.sf(chi2, df=bins - 1))


# --- kernel density estimate -------------------------------------------------


def silverman_bandwidth(samples: Array) -> float:
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 2:
        return 1.0
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    spread = min(x.std(), iqr / 1.34) if iqr > 0 else x.std()
    if spread == 0:
        return 1.0
    return 0.9 * spread * n ** (-0.2)


def kde_1d(samples: Array, grid: Array, bandwidth: Optional[float] = None) -> Array:
    """Gaussian-kernel density on the given grid; Silverman bandwidth when
    none is supplied. Samples are processed in chunks so large draws do not
    materialize a (grid x samples) matrix."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    g = np.asarray(grid, dtype=np.float64)
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ConfigError("bandwidth must be > 0")
    acc = np.zeros(g.size)
    step = max(1, 10_000_000 // max(g.size, 1))
    for lo in range(0, x.size, step):
        z = (g[:, None] - x[None, lo:lo + step]) / h
        acc += np.exp(-0.5 * z * z).sum(axis=1)
    return acc / (x.size * h * np.sqrt(2.0 * np.pi))


def kde_local_maxima(grid: Array, density: Array) -> list[float]:
    """Grid locations of strict interior local maxima of the KDE curve."""
    out = []
    for i in range(1, len(grid) - 1):
        if density[i] > density[i - 1] and density[i] > density[i + 1]:
            out.append(float(grid[i]))
    return out


# --- error tables against analytical moments ---------------------------------


@dataclass
class ErrorTable:
    times: list[float]
    mean_abs_err: Array   # (T, n)
    var_abs_err: Array    # (T, n)
    learned_mean: Array   # (T, n)
    learned_var: Array    # (T, n)


def error_table(
    samples_by_time: dict[float, Array], reference: GaussianMomentsReference
) -> ErrorTable:
    """Per-time, per-dimension absolute errors of sample moments against
    the reference's m(t) and v(t)."""
    times = sorted(samples_by_time)
    me, ve, lm, lv = [], [], [], []
    for t in times:
        summ = moments(samples_by_time[t])
        m_ref, v_ref = reference.moments(t)
        me.append(np.abs(summ.mean - m_ref))
        ve.append(np.abs(summ.variance - v_ref))
        lm.append(summ.mean)
        lv.append(summ.variance)
    return ErrorTable(times, np.array(me), np.array(ve), np.array(lm), np.array(lv))
