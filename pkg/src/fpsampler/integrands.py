"""Named integrands for Monte Carlo / quadrature comparisons (2D unless
noted). Each maps a (P, n) array of points to a (P,) array of values."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

Array = np.ndarray


def _one(X: Array) -> Array:
    return np.ones(X.shape[0])


def _f1(X: Array) -> Array:  # radial second moment
    return X[:, 0] ** 2 + X[:, 1] ** 2


def _f2(X: Array) -> Array:  # first moment
    return X[:, 0]


def _f3(X: Array) -> Array:  # cross correlation
    return X[:, 0] * X[:, 1]


def _f4(X: Array) -> Array:  # localized gaussian bump at (1, 1)
    return np.exp(-((X[:, 0] - 1.0) ** 2) - (X[:, 1] - 1.0) ** 2)


def _f5(X: Array) -> Array:  # oscillatory
    return np.cos(X[:, 0]) * np.sin(X[:, 1])


def _f6(X: Array) -> Array:  # radially damped bump
    r2 = X[:, 0] ** 2 + X[:, 1] ** 2
    return r2 * np.exp(-r2)


INTEGRANDS = {
    "one": _one,
    "f1": _f1,
    "f2": _f2,
    "f3": _f3,
    "f4": _f4,
    "f5": _f5,
    "f6": _f6,
}


def get_integrand(name: str):
    try:
        return INTEGRANDS[name]
    except KeyError:
        raise ConfigError(
            f"unknown integrand {name!r}; valid: {', '.join(sorted(INTEGRANDS))}"
        ) from None
