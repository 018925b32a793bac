"""Shared independent oracles for the test suite.

Everything here recomputes quantities from first principles (finite
differences, quadrature on analytic formulas) without touching the code
paths under test.
"""

import numpy as np

from fpsampler import problems


def isotropic_coefficient(problem):
    """Extract c from A = c I via the structure's quadratic form."""
    x = np.zeros((1, problem.n))
    e1 = np.zeros((1, problem.n))
    e1[0, 0] = 1.0
    return float(np.ravel(problem.diffusion(0.0, x).quad_form(e1))[0])


def d1_4th(f, x, j, h):
    """4th-order central first derivative of scalar field f at x along j."""
    xs = [x.copy() for _ in range(4)]
    xs[0][j] += 2 * h; xs[1][j] += h; xs[2][j] -= h; xs[3][j] -= 2 * h
    v = [f(p) for p in xs]
    return (-v[0] + 8 * v[1] - 8 * v[2] + v[3]) / (12 * h)


def d2_4th(f, x, j, h):
    """4th-order central second derivative of f at x along j."""
    xs = [x.copy() for _ in range(4)]
    xs[0][j] += 2 * h; xs[1][j] += h; xs[2][j] -= h; xs[3][j] -= 2 * h
    v = [f(p) for p in xs]
    return (-v[0] + 16 * v[1] - 30 * f(x) + 16 * v[2] - v[3]) / (12 * h**2)


def stationary_residual_relative(problem, probes, h=1e-3):
    """Max relative residual of the steady operator applied to the
    problem's reference density at the probe points.

    Residual(x) = -1/2 c laplacian(rho) + div(b rho); both terms are
    computed by finite differences of the problem's own callbacks, and the
    residual is normalized by the largest single-term magnitude over the
    probe set so points where both terms cross zero do not blow up.
    """
    ref = problem.reference
    c = isotropic_coefficient(problem)

    def rho(x):
        return float(ref.unnormalized_density(x[None, :])[0])

    def flux(j):
        return lambda x: float(problem.drift(0.0, x[None, :])[0, j]) * rho(x)

    residuals, scales = [], []
    for x in probes:
        lap = sum(d2_4th(rho, x, j, h) for j in range(problem.n))
        div = sum(d1_4th(flux(j), x, j, h) for j in range(problem.n))
        t1 = -0.5 * c * lap
        residuals.append(abs(t1 + div))
        scales.append(max(abs(t1), abs(div)))
    return max(residuals) / max(max(scales), 1e-300)


STATIONARITY_PROBES = {
    "ou1d": lambda: np.linspace(0.8, 3.2, 50)[:, None],
    "dwell1d": lambda: np.concatenate(
        [np.linspace(-1.35, -0.65, 25), np.linspace(0.65, 1.35, 25)]
    )[:, None],
    "dpeak2d": lambda: np.concatenate([
        np.array([1.0, 1.0]) + 0.12 * _unit_circle(25),
        np.array([-1.0, -1.0]) + 0.12 * _unit_circle(25),
    ]),
    "ring2d": lambda: _ring_probes(),
}


def _unit_circle(m):
    ang = np.linspace(0, 2 * np.pi, m, endpoint=False)
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def _ring_probes():
    ang = np.linspace(0, 2 * np.pi, 25, endpoint=False)
    inner = 1.8 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    outer = 2.2 * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.concatenate([inner, outer])


def fd_jacobian_check(problem, probes, h=1e-6):
    """Max relative error of drift_jacobian against finite differences."""
    worst = 0.0
    for x in probes:
        J = problem.drift_jacobian(0.0, x[None, :])[0]
        for j in range(problem.n):
            xp = x.copy(); xp[j] += h
            xm = x.copy(); xm[j] -= h
            fd = (problem.drift(0.0, xp[None, :])[0] - problem.drift(0.0, xm[None, :])[0]) / (2 * h)
            err = np.max(np.abs(J[:, j] - fd)) / max(np.max(np.abs(fd)), 1.0)
            worst = max(worst, err)
    return worst
