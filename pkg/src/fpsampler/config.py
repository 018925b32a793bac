"""Run configuration: INI-style config files, presets, and builders.

A config is four sections — [problem], [net], [train], [output] — with the
exact keys listed in DEFAULTS below. Unknown keys or sections are errors,
not warnings, so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import nn, problems, testfn, trainer
from .errors import ConfigError
from .problems import FpeProblem
from .pushforward import BaseDistribution, BaseKind, MapVariant, PushforwardMap


@dataclass
class RunConfig:
    # [problem]
    problem: str = "ou1d"
    # [net]
    sizes: tuple[int, ...] = (1, 10, 10, 1)
    activation: str = "tanh"
    base: str = "uniform"
    d: int = 1
    variant: str = "steady"
    concat_x0: bool = False
    init_scheme: str = "xavier_uniform"
    init_scale: float = 1.0
    # [train]
    K: int = 100
    M: int = 1000
    M0: int = 500
    MT: int = 1000
    epochs: int = 1000
    gen_lr: float = 1e-3
    adv_lr: float = 1e-2
    adv_every: int = 10
    adv_steps: int = 0
    eps_time: Optional[float] = None
    seed: int = 0
    clip: Optional[float] = None
    checkpoint_every: int = 0
    w_scale: float = 1.0
    # [output]
    out_dir: str = "run"
    n_samples: int = 10000
    sample_times: tuple[float, ...] = ()
    preset: str = ""


_SCHEMA = {
    "problem": {"id"},
    "net": {"sizes", "activation", "base", "d", "variant", "concat_x0",
            "init_scheme", "init_scale"},
    "train": {"k", "m", "m0", "mt", "epochs", "gen_lr", "adv_lr", "adv_every",
              "adv_steps", "eps_time", "seed", "clip", "checkpoint_every", "w_scale"},
    "output": {"dir", "n_samples", "sample_times"},
}


def config_to_ini(cfg: RunConfig) -> str:
    lines = [
        "[problem]",
        f"id = {cfg.problem}",
        "",
        "[net]",
        f"sizes = {','.join(str(s) for s in cfg.sizes)}",
        f"activation = {cfg.activation}",
        f"base = {cfg.base}",
        f"d = {cfg.d}",
        f"variant = {cfg.variant}",
        f"concat_x0 = {'true' if cfg.concat_x0 else 'false'}",
        f"init_scheme = {cfg.init_scheme}",
        f"init_scale = {cfg.init_scale!r}",
        "",
        "[train]",
        f"K = {cfg.K}",
        f"M = {cfg.M}",
        f"M0 = {cfg.M0}",
        f"MT = {cfg.MT}",
        f"epochs = {cfg.epochs}",
        f"gen_lr = {cfg.gen_lr!r}",
        f"adv_lr = {cfg.adv_lr!r}",
        f"adv_every = {cfg.adv_every}",
        f"adv_steps = {cfg.adv_steps}",
        f"eps_time = {'' if cfg.eps_time is None else repr(cfg.eps_time)}",
        f"seed = {cfg.seed}",
        f"clip = {'' if cfg.clip is None else repr(cfg.clip)}",
        f"checkpoint_every = {cfg.checkpoint_every}",
        f"w_scale = {cfg.w_scale!r}",
        "",
        "[output]",
        f"dir = {cfg.out_dir}",
        f"n_samples = {cfg.n_samples}",
        f"sample_times = {','.join(repr(t) for t in cfg.sample_times)}",
    ]
    return "\n".join(lines) + "\n"


def config_from_ini(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse config: {exc}") from exc
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    def get(section, key, fallback=None):
        return parser.get(section, key, fallback=fallback)

    def opt_float(section, key):
        raw = get(section, key, "")
        return float(raw) if raw not in ("", None) else None

    sizes = tuple(int(s) for s in get("net", "sizes", "1,10,10,1").split(","))
    times_raw = get("output", "sample_times", "")
    sample_times = tuple(float(t) for t in times_raw.split(",") if t.strip()) if times_raw else ()
    return RunConfig(
        problem=get("problem", "id", "ou1d"),
        sizes=sizes,
        activation=get("net", "activation", "tanh"),
        base=get("net", "base", "uniform"),
        d=int(get("net", "d", "1")),
        variant=get("net", "variant", "steady"),
        concat_x0=get("net", "concat_x0", "false").lower() in ("true", "1", "yes"),
        init_scheme=get("net", "init_scheme", "xavier_uniform"),
        init_scale=float(get("net", "init_scale", "1.0")),
        K=int(get("train", "k", "100")),
        M=int(get("train", "m", "1000")),
        M0=int(get("train", "m0", "500")),
        MT=int(get("train", "mt", "1000")),
        epochs=int(get("train", "epochs", "1000")),
        gen_lr=float(get("train", "gen_lr", "1e-3")),
        adv_lr=float(get("train", "adv_lr", "1e-2")),
        adv_every=int(get("train", "adv_every", "10")),
        adv_steps=int(get("train", "adv_steps", "0")),
        eps_time=opt_float("train", "eps_time"),
        seed=int(get("train", "seed", "0")),
        clip=opt_float("train", "clip"),
        checkpoint_every=int(get("train", "checkpoint_every", "0")),
        w_scale=float(get("train", "w_scale", "1.0")),
        out_dir=get("output", "dir", "run"),
        n_samples=int(get("output", "n_samples", "10000")),
        sample_times=sample_times,
    )


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply section.key=value strings on top of a config by round-tripping
    through the INI form, so override parsing shares the schema checks."""
    ini = config_to_ini(cfg)
    parser = configparser.ConfigParser()
    parser.read_string(ini)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not parser.has_section(section):
            raise ConfigError(f"unknown config section [{section}]")
        parser.set(section.strip(), key.strip(), value.strip())
    buf = io.StringIO()
    parser.write(buf)
    out = config_from_ini(buf.getvalue())
    return replace(out, preset=cfg.preset)


# --- builders -----------------------------------------------------------------


def build_problem(cfg: RunConfig) -> FpeProblem:
    return problems.make_problem(cfg.problem)


def build_map(cfg: RunConfig, problem: FpeProblem) -> PushforwardMap:
    try:
        activation = nn.Activation(cfg.activation)
        scheme = nn.InitScheme(cfg.init_scheme)
        base_kind = BaseKind(cfg.base)
        variant = MapVariant(cfg.variant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    specs = nn.mlp_specs(list(cfg.sizes), activation)
    net = nn.init_net(specs, cfg.seed, scheme, cfg.init_scale)
    base = BaseDistribution(base_kind, cfg.d)
    mu0 = sigma0 = None
    if variant is MapVariant.GAUSSIAN_IC_LINEAR_TIME:
        if not isinstance(problem.reference, problems.GaussianMomentsReference):
            raise ConfigError("gaussian_ic variant needs a problem with Gaussian moments")
        mu0, var0 = problem.reference.moments(0.0)
        sigma0 = float(np.sqrt(var0))
    return PushforwardMap(variant, net, base, problem.n, mu0=mu0, sigma0=sigma0,
                          concat_x0=cfg.concat_x0)


def build_bank(cfg: RunConfig, problem: FpeProblem) -> testfn.PlaneWaveBank:
    return testfn.init_bank(cfg.K, problem.n, cfg.seed, cfg.w_scale,
                            time_dependent=problem.time_dependent)


def build_train_config(cfg: RunConfig) -> trainer.TrainConfig:
    return trainer.TrainConfig(
        K=cfg.K, M=cfg.M, epochs=cfg.epochs, gen_lr=cfg.gen_lr, adv_lr=cfg.adv_lr,
        adv_every=cfg.adv_every, adv_steps=cfg.adv_steps, M0=cfg.M0, MT=cfg.MT,
        eps_time=cfg.eps_time, seed=cfg.seed, clip=cfg.clip,
    )


# --- presets: the built-in experiment cards ------------------------------------

PRESETS: dict[str, RunConfig] = {
    "ou1d": RunConfig(
        problem="ou1d", sizes=(1, 10, 10, 1), activation="tanh", base="uniform", d=1,
        variant="steady", K=100, M=1000, epochs=20000, gen_lr=1.2e-2, adv_steps=0,
        out_dir="runs/ou1d", preset="ou1d",
    ),
    "dwell1d": RunConfig(
        problem="dwell1d", sizes=(8, 100, 1), activation="tanh", base="normal", d=8,
        variant="steady", K=100, M=1000, epochs=16000, gen_lr=2e-3,
        adv_lr=1e-2, adv_every=10, adv_steps=5,
        out_dir="runs/dwell1d", preset="dwell1d",
    ),
    "dpeak2d": RunConfig(
        problem="dpeak2d", sizes=(16, 32, 32, 2), activation="tanh", base="normal", d=16,
        variant="steady", K=200, M=1000, epochs=100000, gen_lr=1e-2,
        adv_lr=1e-2, adv_every=10, adv_steps=5,
        out_dir="runs/dpeak2d", preset="dpeak2d",
    ),
    "ring2d": RunConfig(
        problem="ring2d", sizes=(4, 64, 2), activation="tanh", base="normal", d=4,
        variant="steady", K=200, M=1000, epochs=20000, gen_lr=1e-2,
        adv_lr=1e-2, adv_every=10, adv_steps=5,
        out_dir="runs/ring2d", preset="ring2d",
    ),
    "outime1d": RunConfig(
        problem="outime1d", sizes=(3, 32, 32, 1), activation="tanh", base="normal", d=2,
        variant="gaussian_ic", K=100, M=1000, M0=500, MT=1000, epochs=20000,
        gen_lr=2e-3, adv_lr=1e-2, adv_every=10, adv_steps=5,
        out_dir="runs/outime1d", n_samples=20000,
        sample_times=(0.01, 0.2, 0.5, 1.0), preset="outime1d",
    ),
    "outime10d": RunConfig(
        problem="outime10d", sizes=(31, 64, 64, 10), activation="tanh", base="normal", d=20,
        variant="sqrt_time", concat_x0=True, K=200, M=16000, M0=2000, MT=2000,
        epochs=20000, gen_lr=1e-3, adv_lr=1e-2, adv_every=10, adv_steps=5,
        out_dir="runs/outime10d", n_samples=20000,
        sample_times=(0.01, 0.2, 0.5, 1.0), preset="outime10d",
    ),
    # full-scale high-dimensional card; far beyond desk-scale budgets
    "outime100d": RunConfig(
        problem="outime100d", sizes=(151, 128, 128, 128, 100), activation="tanh",
        base="normal", d=50, variant="sqrt_time", concat_x0=True,
        K=5000, M=16000, M0=2000, MT=2000, epochs=10000, gen_lr=5e-4,
        adv_lr=1e-2, adv_every=10, adv_steps=5,
        out_dir="runs/outime100d", n_samples=20000,
        sample_times=(0.01, 0.2, 0.5, 1.0), preset="outime100d",
    ),
}


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]
