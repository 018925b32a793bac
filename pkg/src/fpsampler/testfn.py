"""Plane-wave test functions and their closed-form derivatives.

A test function is f(t, x) = sin(u) with phase u = w . x + kappa * t + b0.
Everything the training loop needs — f, df/dt, grad_x f, the adjoint
operator applied to f,

    Lf = -(b . w) cos(u) + 1/2 (w^T A w) sin(u),

its spatial gradient, and the gradients of batch residuals with respect to
the wave parameters (w, kappa, b0) — is evaluated from these closed forms;
no automatic differentiation is involved anywhere in this module.

Batch evaluations are cached per (sample, wave) pair so the same pass feeds
the loss value, the generator's input-cotangents and the adversary's
parameter gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, NumericError, ShapeError
from .problems import FpeProblem
from .rng import derive_rng

Array = np.ndarray


@dataclass(frozen=True)
class PlaneWave:
    w: Array        # (n,) spatial frequency
    kappa: float    # temporal frequency; 0 for steady problems
    b0: float       # phase bias

    def __post_init__(self):
        if not (np.all(np.isfinite(self.w)) and np.isfinite(self.kappa) and np.isfinite(self.b0)):
            raise ConfigError("plane wave parameters must be finite")


@dataclass
class PlaneWaveBank:
    """K plane waves stored as arrays: W (K, n), kappa (K,), b0 (K,)."""

    W: Array
    kappa: Array
    b0: Array

    def __post_init__(self):
        if self.W.ndim != 2 or self.W.shape[0] < 1:
            raise ConfigError("bank needs K >= 1 waves")
        K = self.W.shape[0]
        if self.kappa.shape != (K,) or self.b0.shape != (K,):
            raise ShapeError("kappa/b0 must have one entry per wave")

    @property
    def K(self) -> int:
        return self.W.shape[0]

    @property
    def n(self) -> int:
        return self.W.shape[1]

    def wave(self, k: int) -> PlaneWave:
        return PlaneWave(self.W[k].copy(), float(self.kappa[k]), float(self.b0[k]))

    @property
    def n_params(self) -> int:
        return self.K * self.n + 2 * self.K

    def param_vector(self) -> Array:
        return np.concatenate([self.W.ravel(), self.kappa, self.b0])

    def with_params(self, flat: Array) -> "PlaneWaveBank":
        K, n = self.K, self.n
        if flat.shape != (self.n_params,):
            raise ShapeError(f"expected flat vector of length {self.n_params}")
        return PlaneWaveBank(
            flat[: K * n].reshape(K, n).copy(),
            flat[K * n : K * n + K].copy(),
            flat[K * n + K :].copy(),
        )


def init_bank(
    K: int, n: int, seed: int, w_scale: float = 1.0, time_dependent: bool = False
) -> PlaneWaveBank:
    """w ~ N(0, w_scale^2 I), b0 ~ U(0, 2pi); kappa ~ N(0, w_scale^2) for
    time-dependent banks, zero otherwise. Deterministic per seed."""
    if K < 1:
        raise ConfigError("K must be >= 1")
    rng = derive_rng(seed, "bank-init")
    W = rng.normal(0.0, w_scale, size=(K, n))
    b0 = rng.uniform(0.0, 2.0 * np.pi, size=K)
    kappa = rng.normal(0.0, w_scale, size=K) if time_dependent else np.zeros(K)
    return PlaneWaveBank(W, kappa, b0)


@dataclass
class BankGrad:
    """Loss gradient with respect to every wave's (w, kappa, b0)."""

    dW: Array       # (K, n)
    dkappa: Array   # (K,)
    db0: Array      # (K,)

    def flatten(self) -> Array:
        return np.concatenate([self.dW.ravel(), self.dkappa, self.db0])


# --- batch evaluation cache ------------------------------------------------


@dataclass
class WaveBatchEval:
    """Per-(sample, wave) quantities for one batch at one set of times.

    t is a scalar or an (M,) vector. Drift-dependent fields are None when
    the batch was evaluated for plain f only (initial/terminal terms).
    """

    t: float | Array
    X: Array                     # (M, n)
    u: Array                     # (M, K)
    cos_u: Array
    sin_u: Array
    drift: Array | None          # (M, n)
    bw: Array | None             # (M, K), per-sample b . w_k
    quad: Array | None           # (K,) or (M, K), per-wave w^T A w
    diffusion: object | None


def evaluate_batch(
    bank: PlaneWaveBank,
    t: float | Array,
    X: Array,
    problem: FpeProblem | None = None,
) -> WaveBatchEval:
    """Evaluate every wave's phase on a batch; with a problem, also cache
    the drift/diffusion contractions needed for Lf."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != bank.n:
        raise ShapeError(f"expected batch (M, {bank.n}), got {X.shape}")
    t_col = t[:, None] if isinstance(t, np.ndarray) else t
    u = X @ bank.W.T + bank.kappa[None, :] * t_col + bank.b0[None, :]
    cos_u, sin_u = np.cos(u), np.sin(u)
    drift = bw = quad = diff = None
    if problem is not None:
        if problem.n != bank.n:
            raise ShapeError(f"problem dimension {problem.n} != bank dimension {bank.n}")
        drift = np.asarray(problem.drift(t, X), dtype=np.float64)
        if not np.all(np.isfinite(drift)):
            m = int(np.argwhere(~np.isfinite(drift))[0][0])
            raise NumericError(f"drift returned non-finite value at sample {m}")
        bw = drift @ bank.W.T
        diff = problem.diffusion(t, X)
        quad = diff.quad_form(bank.W)
        if not np.all(np.isfinite(quad)):
            raise NumericError("diffusion quadratic form is non-finite")
    return WaveBatchEval(t, X, u, cos_u, sin_u, drift, bw, quad, diff)


def _require_drift(ev: WaveBatchEval) -> None:
    if ev.drift is None:
        raise ContractError("batch was evaluated without a problem; Lf terms unavailable")


def f_values(ev: WaveBatchEval) -> Array:
    """f = sin(u) for every (sample, wave); (M, K)."""
    return ev.sin_u


def lf_values(ev: WaveBatchEval) -> Array:
    """Adjoint operator on each wave: -(b.w) cos u + 1/2 (w^T A w) sin u."""
    _require_drift(ev)
    return -ev.bw * ev.cos_u + 0.5 * ev.quad * ev.sin_u


def interior_values(ev: WaveBatchEval, bank: PlaneWaveBank) -> Array:
    """df/dt + Lf = kappa cos u + Lf for every (sample, wave)."""
    return bank.kappa[None, :] * ev.cos_u + lf_values(ev)


def x_cotangent(
    ev: WaveBatchEval,
    bank: PlaneWaveBank,
    problem: FpeProblem,
    weights: Array,
    include_time_term: bool = False,
) -> Array:
    """Weighted spatial gradient sum_k weights_k * grad_x[g_k](x_m), (M, n).

    g is Lf, or df/dt + Lf when include_time_term is set. Differentiating
    the closed form gives, per wave,

        d_j(Lf)    = -(d_j b . w) cos u + (b . w) w_j sin u
                     + 1/2 (w^T d_j A w) sin u + 1/2 (w^T A w) w_j cos u
        d_j(df/dt) = -kappa w_j sin u

    and the weighted sum is assembled by contracting each term over waves.
    """
    _require_drift(ev)
    if weights.shape != (bank.K,):
        raise ShapeError("need one weight per wave")
    W = bank.W
    J = np.asarray(problem.drift_jacobian(ev.t, ev.X), dtype=np.float64)
    # -(d_j b . w): V1_m = sum_k weights_k cos(u_mk) w_k, then contract with J
    V1 = (weights[None, :] * ev.cos_u) @ W
    out = -np.einsum("mij,mi->mj", J, V1)
    # (b . w) w_j sin u
    out += (weights[None, :] * ev.bw * ev.sin_u) @ W
    # 1/2 (w^T A w) w_j cos u
    out += (0.5 * weights[None, :] * ev.quad * ev.cos_u) @ W
    # 1/2 (w^T d_j A w) sin u; zero for constant diffusion
    if problem.diffusion_spatial_derivative is not None:
        s = weights[None, :] * ev.sin_u
        for j in range(bank.n):
            dA = problem.diffusion_spatial_derivative(ev.t, ev.X, j)
            if dA is None:
                continue
            qj = dA.quad_form(W)
            out[:, j] += 0.5 * np.sum(s * qj, axis=1)
    if include_time_term:
        out += (-(weights * bank.kappa)[None, :] * ev.sin_u) @ W
    return out


def f_x_cotangent(ev: WaveBatchEval, bank: PlaneWaveBank, weights: Array) -> Array:
    """Weighted sum of grad_x f_k = w_k cos u; (M, n)."""
    if weights.shape != (bank.K,):
        raise ShapeError("need one weight per wave")
    return (weights[None, :] * ev.cos_u) @ bank.W


# --- per-term wave-parameter derivatives ------------------------------------
#
# All three residual terms share the chain-rule pattern through u: with
# h = dg/db0 the remaining partials are dg/dw_j = x_j h + (direct terms) and
# dg/dkappa = t h + (direct term). The helpers below return per-wave batch
# means, i.e. dE/d(eta) for E = mean_m g(x_m).


def _f_term_grads(ev: WaveBatchEval, bank: PlaneWaveBank) -> BankGrad:
    M = ev.X.shape[0]
    dW = ev.cos_u.T @ ev.X / M
    if isinstance(ev.t, np.ndarray):
        dk = (ev.t[:, None] * ev.cos_u).sum(axis=0) / M
    else:
        dk = float(ev.t) * ev.cos_u.sum(axis=0) / M
    db0 = ev.cos_u.mean(axis=0)
    return BankGrad(dW, dk, db0)


def _interior_term_grads(
    ev: WaveBatchEval, bank: PlaneWaveBank, include_time_term: bool
) -> BankGrad:
    _require_drift(ev)
    M = ev.X.shape[0]
    kap = bank.kappa[None, :] if include_time_term else 0.0
    h = (ev.bw - kap) * ev.sin_u + 0.5 * ev.quad * ev.cos_u
    dW = (h.T @ ev.X - ev.cos_u.T @ ev.drift + ev.diffusion.weighted_aw_by_wave(ev.sin_u, bank.W)) / M
    db0 = h.mean(axis=0)
    if include_time_term:
        if isinstance(ev.t, np.ndarray):
            dk = (ev.cos_u + ev.t[:, None] * h).sum(axis=0) / M
        else:
            dk = (ev.cos_u + float(ev.t) * h).sum(axis=0) / M
    else:
        dk = np.zeros(bank.K)
    return BankGrad(dW, dk, db0)


def adversary_grads_steady(
    bank: PlaneWaveBank, ev: WaveBatchEval, residuals: Array
) -> BankGrad:
    """dLoss/d(eta_k) = (2/K) R_k dR_k/d(eta_k) for the steady loss, where
    R_k is the batch mean of Lf_k."""
    if residuals.shape != (bank.K,):
        raise ContractError("residuals do not match bank size")
    g = _interior_term_grads(ev, bank, include_time_term=False)
    coef = (2.0 / bank.K) * residuals
    return BankGrad(coef[:, None] * g.dW, np.zeros(bank.K), coef * g.db0)


def adversary_grads_time(
    bank: PlaneWaveBank,
    ev_interior: WaveBatchEval,
    ev_initial: WaveBatchEval,
    ev_terminal: WaveBatchEval,
    residuals: Array,
    interior_scale: float,
) -> BankGrad:
    """dLoss/d(eta_k) for the three-term residual
    R_k = E_T[f] - E_0[f] - (T - eps) E[df/dt + Lf]."""
    if residuals.shape != (bank.K,):
        raise ContractError("residuals do not match bank size")
    gT = _f_term_grads(ev_terminal, bank)
    g0 = _f_term_grads(ev_initial, bank)
    gI = _interior_term_grads(ev_interior, bank, include_time_term=True)
    coef = (2.0 / bank.K) * residuals
    dW = coef[:, None] * (gT.dW - g0.dW - interior_scale * gI.dW)
    dk = coef * (gT.dkappa - g0.dkappa - interior_scale * gI.dkappa)
    db0 = coef * (gT.db0 - g0.db0 - interior_scale * gI.db0)
    return BankGrad(dW, dk, db0)


# --- single-wave conveniences (used heavily by the test suite) ---------------


def _as_bank(wave: PlaneWave) -> PlaneWaveBank:
    return PlaneWaveBank(wave.w[None, :].copy(), np.array([wave.kappa]), np.array([wave.b0]))


def eval_f(wave: PlaneWave, t: float, x: Array) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != wave.w.shape:
        raise ShapeError(f"x has shape {x.shape}, wave has {wave.w.shape}")
    return float(np.sin(np.dot(wave.w, x) + wave.kappa * t + wave.b0))


def eval_ft(wave: PlaneWave, t: float, x: Array) -> float:
    """df/dt = kappa cos(u)."""
    x = np.asarray(x, dtype=np.float64)
    return float(wave.kappa * np.cos(np.dot(wave.w, x) + wave.kappa * t + wave.b0))


def eval_lf(wave: PlaneWave, t: float, x: Array, problem: FpeProblem) -> float:
    ev = evaluate_batch(_as_bank(wave), t, np.asarray(x, dtype=np.float64)[None, :], problem)
    return float(lf_values(ev)[0, 0])


def grad_x_lf(
    wave: PlaneWave, t: float, x: Array, problem: FpeProblem, include_time_term: bool = False
) -> Array:
    bank = _as_bank(wave)
    ev = evaluate_batch(bank, t, np.asarray(x, dtype=np.float64)[None, :], problem)
    return x_cotangent(ev, bank, problem, np.ones(1), include_time_term)[0]


# --- CSV serialization -------------------------------------------------------

_FMT = "%.17g"


def bank_to_csv(bank: PlaneWaveBank) -> str:
    header = "k,b0,kappa," + ",".join(f"w_{i+1}" for i in range(bank.n))
    rows = [header]
    for k in range(bank.K):
        vals = [str(k), _FMT % bank.b0[k], _FMT % bank.kappa[k]]
        vals += [_FMT % w for w in bank.W[k]]
        rows.append(",".join(vals))
    return "\n".join(rows) + "\n"


def bank_from_csv(text: str) -> PlaneWaveBank:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[:3] != ["k", "b0", "kappa"]:
        raise ConfigError("not a recognized bank dump")
    n = len(header) - 3
    K = len(lines) - 1
    W = np.empty((K, n))
    kappa = np.empty(K)
    b0 = np.empty(K)
    for row, ln in enumerate(lines[1:]):
        parts = ln.split(",")
        b0[row] = float(parts[1])
        kappa[row] = float(parts[2])
        W[row] = [float(p) for p in parts[3:]]
    return PlaneWaveBank(W, kappa, b0)


def save_bank(bank: PlaneWaveBank, path) -> None:
    with open(path, "w") as fh:
        fh.write(bank_to_csv(bank))


def load_bank(path) -> PlaneWaveBank:
    with open(path) as fh:
        return bank_from_csv(fh.read())
