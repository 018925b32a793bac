"""Adversarial training loop for pushforward samplers.

Steady loss over a bank of K waves and a batch of M generated samples:

    E_k  = (1/M) sum_m Lf_k(x_m),     loss = (1/K) sum_k E_k^2.

Time-dependent loss combines three Monte Carlo terms per wave,

    R_k = E_T[f_k] - E_0[f_k] - (T - eps) * E[df_k/dt + Lf_k],

with terminal samples pushed to t = T, initial samples drawn straight from
the initial law, and interior samples at t ~ U(eps, T); loss is the mean
squared residual. The generator takes Adam descent steps; the adversary
takes SGD ascent steps on the wave parameters — `adv_steps` consecutive
ascents on epochs divisible by `adv_every`, one otherwise, and none at all
when adv_steps = 0 (fixed-bank regime).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import testfn
from .errors import ConfigError, NumericError
from .optim import AdamState, Direction, SgdState, adam_step, clip_by_norm, sgd_step
from .problems import FpeProblem
from .pushforward import MapVariant, PushforwardMap, push_steady, push_time, sample_base, backprop_through_push
from .rng import derive_rng
from .testfn import PlaneWaveBank

Array = np.ndarray


@dataclass
class TrainConfig:
    K: int
    M: int
    epochs: int
    gen_lr: float
    adv_lr: float = 1e-2
    adv_every: int = 10
    adv_steps: int = 0
    M0: int = 500
    MT: int = 1000
    eps_time: Optional[float] = None   # default 1e-3 * horizon
    seed: int = 0
    clip: Optional[float] = None

    def __post_init__(self):
        for name in ("K", "M", "M0", "MT", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.adv_steps < 0 or self.adv_every < 1:
            raise ConfigError("adv_steps must be >= 0 and adv_every >= 1")


@dataclass
class LossReport:
    epoch: int
    loss: float
    residuals: Optional[Array] = None
    wall_time: float = 0.0


@dataclass
class TrainResult:
    history: list[LossReport]
    map: PushforwardMap
    bank: PlaneWaveBank
    seconds: float

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss


class TrainAbort(NumericError):
    """Raised when the loss goes non-finite; carries the offending batch."""

    def __init__(self, msg: str, epoch: int, batch_dump: dict):
        super().__init__(msg)
        self.epoch = epoch
        self.batch_dump = batch_dump


# --- steady case -------------------------------------------------------------


@dataclass
class SteadyCache:
    ev: testfn.WaveBatchEval
    tape: object
    r_batch: Array
    X: Array


def steady_loss(
    pm: PushforwardMap, bank: PlaneWaveBank, problem: FpeProblem, r_batch: Array
) -> tuple[float, Array, SteadyCache]:
    X, tape = push_steady(pm, r_batch)
    ev = testfn.evaluate_batch(bank, 0.0, X, problem)
    lf = testfn.lf_values(ev)
    if not np.all(np.isfinite(lf)):
        m = int(np.argwhere(~np.isfinite(lf))[0][0])
        raise NumericError(f"non-finite operator value at sample {m}")
    residuals = lf.mean(axis=0)
    loss = float(np.mean(residuals**2))
    return loss, residuals, SteadyCache(ev, tape, r_batch, X)


def steady_generator_grad(
    pm: PushforwardMap, bank: PlaneWaveBank, problem: FpeProblem,
    residuals: Array, cache: SteadyCache,
) -> Array:
    # dLoss/dx_m = sum_k (2/K) E_k (1/M) grad_x Lf_k(x_m)
    M = cache.X.shape[0]
    weights = (2.0 / (bank.K * M)) * residuals
    cot = testfn.x_cotangent(cache.ev, bank, problem, weights)
    return backprop_through_push(pm, cache.tape, None, cot)


# --- time-dependent case -------------------------------------------------------


@dataclass
class TimeBatches:
    t_int: Array     # (M,), drawn from U(eps, T)
    x0_int: Array    # (M, n)
    r_int: Array     # (M, d)
    x0_init: Array   # (M0, n)
    x0_term: Array   # (MT, n)
    r_term: Array    # (MT, d)
    eps: float


@dataclass
class TimeCache:
    ev_int: testfn.WaveBatchEval
    tape_int: object
    aux_int: object
    ev_init: testfn.WaveBatchEval
    ev_term: testfn.WaveBatchEval
    tape_term: object
    aux_term: object
    interior_scale: float


def draw_time_batches(
    problem: FpeProblem, pm: PushforwardMap, cfg: TrainConfig, rng: np.random.Generator
) -> TimeBatches:
    T = problem.horizon
    eps = cfg.eps_time if cfg.eps_time is not None else 1e-3 * T
    if not 0 < eps < T:
        raise ConfigError("eps_time must lie in (0, horizon)")
    t_int = rng.uniform(eps, T, size=cfg.M)
    x0_int = problem.initial_sampler(cfg.M, rng)
    r_int = sample_base(pm.base, cfg.M, rng)
    x0_init = problem.initial_sampler(cfg.M0, rng)
    x0_term = problem.initial_sampler(cfg.MT, rng)
    r_term = sample_base(pm.base, cfg.MT, rng)
    return TimeBatches(t_int, x0_int, r_int, x0_init, x0_term, r_term, eps)


def time_loss(
    pm: PushforwardMap, bank: PlaneWaveBank, problem: FpeProblem, batches: TimeBatches
) -> tuple[float, Array, TimeCache]:
    T = float(problem.horizon)
    X_int, tape_int, aux_int = push_time(pm, batches.t_int, batches.x0_int, batches.r_int)
    ev_int = testfn.evaluate_batch(bank, batches.t_int, X_int, problem)
    interior = testfn.interior_values(ev_int, bank)
    if not np.all(np.isfinite(interior)):
        m = int(np.argwhere(~np.isfinite(interior))[0][0])
        raise NumericError(f"non-finite interior integrand at sample {m}")

    MT = batches.r_term.shape[0]
    X_T, tape_term, aux_term = push_time(pm, np.full(MT, T), batches.x0_term, batches.r_term)
    ev_term = testfn.evaluate_batch(bank, T, X_T)
    ev_init = testfn.evaluate_batch(bank, 0.0, batches.x0_init)

    # the interior integral carries the measure of the sampled time window
    interior_scale = T - batches.eps
    e_int = interior_scale * interior.mean(axis=0)
    e_term = testfn.f_values(ev_term).mean(axis=0)
    e_init = testfn.f_values(ev_init).mean(axis=0)
    residuals = e_term - e_init - e_int
    loss = float(np.mean(residuals**2))
    cache = TimeCache(ev_int, tape_int, aux_int, ev_init, ev_term, tape_term, aux_term,
                      interior_scale)
    return loss, residuals, cache


def time_generator_grad(
    pm: PushforwardMap, bank: PlaneWaveBank, problem: FpeProblem,
    residuals: Array, cache: TimeCache,
) -> Array:
    K = bank.K
    MT = cache.ev_term.X.shape[0]
    M = cache.ev_int.X.shape[0]
    # terminal term: + (2/K) R_k d(E_T)/dtheta
    w_term = (2.0 / (K * MT)) * residuals
    cot_term = testfn.f_x_cotangent(cache.ev_term, bank, w_term)
    grad = backprop_through_push(pm, cache.tape_term, cache.aux_term, cot_term)
    # interior term: - (2/K) R_k (T - eps)/M d(E)/dtheta
    w_int = -(2.0 / K) * residuals * cache.interior_scale / M
    cot_int = testfn.x_cotangent(cache.ev_int, bank, problem, w_int, include_time_term=True)
    grad += backprop_through_push(pm, cache.tape_int, cache.aux_int, cot_int)
    return grad


# --- the loop ------------------------------------------------------------------

Sink = Callable[[LossReport, PushforwardMap, PlaneWaveBank], None]


def train(
    problem: FpeProblem,
    pm: PushforwardMap,
    bank: PlaneWaveBank,
    cfg: TrainConfig,
    sink: Optional[Sink] = None,
) -> TrainResult:
    """Alternating ascent/descent; returns the trained map and bank along
    with the per-epoch loss history. Deterministic for a fixed config."""
    if bank.K != cfg.K:
        raise ConfigError(f"bank has {bank.K} waves but config.K = {cfg.K}")
    if bank.n != problem.n or pm.n != problem.n:
        raise ConfigError("map, bank and problem dimensions must agree")
    if problem.time_dependent and pm.variant is MapVariant.STEADY:
        raise ConfigError("time-dependent problem needs a time-dependent map variant")
    if not problem.time_dependent and pm.variant is not MapVariant.STEADY:
        raise ConfigError("steady problem needs the steady map variant")

    params = pm.param_vector()
    adam = AdamState.fresh(params.size, cfg.gen_lr)
    sgd = SgdState(cfg.adv_lr)
    history: list[LossReport] = []
    t0 = time.perf_counter()

    for epoch in range(cfg.epochs):
        rng = derive_rng(cfg.seed, "batch", epoch)
        if problem.time_dependent:
            batch = draw_time_batches(problem, pm, cfg, rng)
            loss_fn = lambda: time_loss(pm, bank, problem, batch)
        else:
            r_batch = sample_base(pm.base, cfg.M, rng)
            loss_fn = lambda: steady_loss(pm, bank, problem, r_batch)

        # adversary phase: ascent step(s) on the wave parameters, before the
        # generator update of this epoch; the epoch's batch is reused
        if cfg.adv_steps > 0:
            n_ascents = cfg.adv_steps if epoch % cfg.adv_every == 0 else 1
            for _ in range(n_ascents):
                loss, residuals, cache = loss_fn()
                if problem.time_dependent:
                    bgrad = testfn.adversary_grads_time(
                        bank, cache.ev_int, cache.ev_init, cache.ev_term,
                        residuals, cache.interior_scale,
                    ).flatten()
                else:
                    bgrad = testfn.adversary_grads_steady(bank, cache.ev, residuals).flatten()
                if cfg.clip:
                    bgrad = clip_by_norm(bgrad, cfg.clip)
                bank = bank.with_params(sgd_step(bank.param_vector(), bgrad, sgd, Direction.ASCENT))

        loss, residuals, cache = loss_fn()
        if not np.isfinite(loss):
            dump = {"epoch": epoch, "params": params}
            raise TrainAbort(f"loss became non-finite at epoch {epoch}", epoch, dump)
        if problem.time_dependent:
            grad = time_generator_grad(pm, bank, problem, residuals, cache)
        else:
            grad = steady_generator_grad(pm, bank, problem, residuals, cache)
        if cfg.clip:
            grad = clip_by_norm(grad, cfg.clip)
        params, adam = adam_step(params, grad, adam, Direction.DESCENT)
        pm = pm.with_params(params)

        report = LossReport(epoch, loss, residuals, time.perf_counter() - t0)
        history.append(report)
        if sink is not None:
            sink(report, pm, bank)

    return TrainResult(history, pm, bank, time.perf_counter() - t0)
