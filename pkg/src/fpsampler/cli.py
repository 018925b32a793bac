"""Experiment runner: train / sample / integrate / validate / oracle.

Every run materializes a self-describing artifact directory:

    config.ini          complete config echo (re-runnable)
    manifest.json       seeds, versions, file list
    loss_history.csv    epoch, loss
    net.txt, bank.csv   trained generator and wave bank
    samples*.csv        generated samples (one file per time for
                        time-dependent problems)
    metrics.json        moments, error tables, reference curves

Exit codes: 0 success, 2 config error, 3 numeric abort, 4 I/O error.
The FPSAMPLER_OUTPUT_ROOT environment variable prepends a root to every
relative output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, metrics, nn, oracle, testfn, trainer
from .config import (
    RunConfig,
    apply_overrides,
    build_bank,
    build_map,
    build_problem,
    build_train_config,
    config_from_ini,
    config_to_ini,
    load_preset,
)
from .errors import ConfigError, NumericError
from .integrands import INTEGRANDS, get_integrand
from .problems import BoltzmannReference, GaussianMomentsReference, FpeProblem
from .pushforward import PushforwardMap
from .rng import derive_rng

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % x


def resolve_out_dir(path_str: str) -> Path:
    root = os.environ.get("FPSAMPLER_OUTPUT_ROOT", "")
    p = Path(path_str)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p


def write_loss_csv(path: Path, history) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for rep in history:
            fh.write(f"{rep.epoch},{_fmt(rep.loss)}\n")


def write_samples_csv(path: Path, X: np.ndarray, t: float | None = None) -> None:
    n = X.shape[1]
    header = ",".join(f"x_{i+1}" for i in range(n))
    if t is not None:
        header = "t," + header
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in X:
            cells = [_fmt(v) for v in row]
            if t is not None:
                cells.insert(0, _fmt(t))
            fh.write(",".join(cells) + "\n")


def read_samples_csv(path: Path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        has_t = header[0] == "t"
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    X = np.array(rows)
    return X[:, 1:] if has_t else X


# --- metrics ---------------------------------------------------------------


def compute_metrics(problem: FpeProblem, pm: PushforwardMap, cfg: RunConfig,
                    final_loss: float | None = None) -> dict:
    out: dict = {"problem": problem.name, "n": problem.n}
    if final_loss is not None:
        out["final_loss"] = final_loss
    if not problem.time_dependent:
        X = metrics.generate_samples(pm, cfg.n_samples, seed=cfg.seed)
        summ = metrics.moments(X)
        out["moments"] = {
            "mean": summ.mean.tolist(),
            "variance": summ.variance.tolist(),
            "mean_radius": summ.mean_radius,
            "count": summ.count,
        }
        ref = problem.reference
        if problem.n == 1 and isinstance(ref, BoltzmannReference):
            lo, hi = oracle.DEFAULT_BOXES.get(problem.name, ((-6.0, 6.0),))[0]
            grid = np.linspace(lo, hi, 801)
            dens = metrics.kde_1d(X[:, 0], grid)
            rho = ref.unnormalized_density(grid[:, None])
            qgrid = oracle.QuadGrid(((lo, hi),), (801,))
            _, w = oracle.grid_points_weights(qgrid)
            rho_norm = rho / float(w @ rho)
            out["kde"] = {"x": grid.tolist(), "density": dens.tolist()}
            out["reference_density"] = {"x": grid.tolist(), "density": rho_norm.tolist()}
        if problem.n == 2 and isinstance(ref, BoltzmannReference):
            hist = metrics.radial_angular(X)
            out["radial_angular"] = {
                "r_edges": hist.r_edges.tolist(),
                "r_mass": hist.r_mass.tolist(),
                "theta_edges": hist.theta_edges.tolist(),
                "theta_mass": hist.theta_mass.tolist(),
                "chi2_pvalue": metrics.angular_uniformity_pvalue(X),
            }
            box = oracle.DEFAULT_BOXES.get(problem.name, ((-5.0, 5.0), (-5.0, 5.0)))
            gx = np.linspace(box[0][0], box[0][1], 101)
            gy = np.linspace(box[1][0], box[1][1], 101)
            mesh = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
            vals = ref.unnormalized_density(mesh).reshape(101, 101)
            out["reference_density_2d"] = {
                "x": gx.tolist(), "y": gy.tolist(), "density": vals.tolist(),
            }
    else:
        ref = problem.reference
        times = list(cfg.sample_times) or [0.01, 0.2, 0.5, 1.0]
        by_time = {
            t: metrics.generate_samples(pm, cfg.n_samples, seed=cfg.seed, t=t,
                                        initial_sampler=problem.initial_sampler)
            for t in times
        }
        out["moments_by_time"] = {
            repr(t): {
                "mean": metrics.moments(X).mean.tolist(),
                "variance": metrics.moments(X).variance.tolist(),
            }
            for t, X in by_time.items()
        }
        if isinstance(ref, GaussianMomentsReference):
            table = metrics.error_table(by_time, ref)
            out["error_table"] = {
                "times": table.times,
                "mean_abs_err": table.mean_abs_err.tolist(),
                "var_abs_err": table.var_abs_err.tolist(),
                "learned_mean": table.learned_mean.tolist(),
                "learned_var": table.learned_var.tolist(),
            }
            t_dense = np.linspace(0.0, problem.horizon, 101)
            out["reference_moments"] = {
                "t": t_dense.tolist(),
                "mean": [ref.moments(float(t))[0].tolist() for t in t_dense],
                "var": [ref.moments(float(t))[1] for t in t_dense],
            }
    return out


# --- artifact assembly -------------------------------------------------------


def write_run_artifact(run_dir: Path, cfg: RunConfig, problem: FpeProblem,
                       result: trainer.TrainResult) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.ini").write_text(config_to_ini(cfg))
    write_loss_csv(run_dir / "loss_history.csv", result.history)
    nn.save_net(result.map.net, run_dir / "net.txt")
    testfn.save_bank(result.bank, run_dir / "bank.csv")
    files = ["config.ini", "loss_history.csv", "net.txt", "bank.csv", "metrics.json"]
    if not problem.time_dependent:
        X = metrics.generate_samples(result.map, cfg.n_samples, seed=cfg.seed)
        write_samples_csv(run_dir / "samples.csv", X)
        files.append("samples.csv")
    else:
        for t in cfg.sample_times or (0.01, 0.2, 0.5, 1.0):
            X = metrics.generate_samples(result.map, cfg.n_samples, seed=cfg.seed, t=t,
                                         initial_sampler=problem.initial_sampler)
            name = f"samples_t{t}.csv"
            write_samples_csv(run_dir / name, X, t=t)
            files.append(name)
    m = compute_metrics(problem, result.map, cfg, final_loss=result.final_loss)
    (run_dir / "metrics.json").write_text(json.dumps(m, indent=1))
    manifest = {
        "preset": cfg.preset,
        "problem": cfg.problem,
        "seed": cfg.seed,
        "config": "config.ini",
        "versions": {
            "fpsampler": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "files": files + ["manifest.json"],
        "wall_seconds": result.seconds,
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))


def load_run(run_dir: Path) -> tuple[RunConfig, FpeProblem, PushforwardMap, testfn.PlaneWaveBank]:
    cfg = config_from_ini((run_dir / "config.ini").read_text())
    problem = build_problem(cfg)
    pm = build_map(cfg, problem)
    net = nn.load_net(run_dir / "net.txt")
    pm = pm.with_params(net.param_vector())
    bank = testfn.load_bank(run_dir / "bank.csv")
    return cfg, problem, pm, bank


# --- subcommands ---------------------------------------------------------------


def _load_config(args) -> RunConfig:
    if args.preset:
        cfg = load_preset(args.preset)
    elif args.config:
        cfg = config_from_ini(Path(args.config).read_text())
    else:
        raise ConfigError("need --preset or --config")
    if getattr(args, "set", None):
        cfg = apply_overrides(cfg, args.set)
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    return cfg


def cmd_train(args) -> int:
    cfg = _load_config(args)
    problem = build_problem(cfg)
    pm = build_map(cfg, problem)
    bank = build_bank(cfg, problem)
    tcfg = build_train_config(cfg)
    run_dir = resolve_out_dir(cfg.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    sink = None
    if cfg.checkpoint_every > 0:
        ckpt_dir = run_dir / "checkpoints"
        ckpt_dir.mkdir(exist_ok=True)

        def sink(report, pm_now, bank_now):
            if (report.epoch + 1) % cfg.checkpoint_every == 0:
                nn.save_net(pm_now.net, ckpt_dir / f"epoch{report.epoch + 1}_net.txt")
                testfn.save_bank(bank_now, ckpt_dir / f"epoch{report.epoch + 1}_bank.csv")

    echo = int(os.environ.get("FPSAMPLER_PROGRESS", "0"))
    if echo:
        inner = sink

        def sink(report, pm_now, bank_now):  # noqa: F811
            if report.epoch % echo == 0:
                print(f"epoch {report.epoch}: loss {report.loss:.6g}", flush=True)
            if inner:
                inner(report, pm_now, bank_now)

    result = trainer.train(problem, pm, bank, tcfg, sink=sink)
    write_run_artifact(run_dir, cfg, problem, result)
    print(f"run artifact written to {run_dir} (final loss {result.final_loss:.6g})")
    return 0


def cmd_sample(args) -> int:
    run_dir = resolve_out_dir(args.run_dir)
    cfg, problem, pm, _ = load_run(run_dir)
    out_dir = resolve_out_dir(args.out) if args.out else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if args.seed is None else args.seed
    if problem.time_dependent:
        times = [float(t) for t in args.times.split(",")] if args.times else list(
            cfg.sample_times or (0.01, 0.2, 0.5, 1.0))
        for t in times:
            X = metrics.generate_samples(pm, args.n, seed=seed, t=t,
                                         initial_sampler=problem.initial_sampler)
            write_samples_csv(out_dir / f"samples_t{t}.csv", X, t=t)
    else:
        X = metrics.generate_samples(pm, args.n, seed=seed)
        write_samples_csv(out_dir / "samples.csv", X)
    print(f"samples written to {out_dir}")
    return 0


def cmd_integrate(args) -> int:
    run_dir = resolve_out_dir(args.run_dir)
    cfg, problem, pm, _ = load_run(run_dir)
    if problem.n != 2:
        raise ConfigError("integration benchmark functions are defined on 2D problems")
    names = args.functions.split(",") if args.functions else sorted(INTEGRANDS)
    sizes = [int(s) for s in args.sizes.split(",")]
    fns = {name: get_integrand(name) for name in names}
    grid = oracle.default_grid(problem, args.grid_points)
    table = oracle.reference_table(problem, grid, fns)
    (run_dir / "reference.json").write_text(json.dumps(table, indent=1))
    with open(run_dir / "mc_convergence.csv", "w") as fh:
        fh.write("function,N,estimate,std_error,reference\n")
        for name in names:
            est = metrics.mc_integrate(pm, name, sizes, seed=cfg.seed)
            for N, e, se in zip(est.sizes, est.estimates, est.std_errors):
                fh.write(f"{name},{N},{_fmt(e)},{_fmt(se)},{_fmt(table[name])}\n")
    print(f"MC convergence table written to {run_dir / 'mc_convergence.csv'}")
    return 0


def cmd_validate(args) -> int:
    run_dir = resolve_out_dir(args.run_dir)
    cfg, problem, pm, _ = load_run(run_dir)
    final_loss = None
    loss_csv = run_dir / "loss_history.csv"
    if loss_csv.exists():
        last = loss_csv.read_text().strip().splitlines()[-1]
        final_loss = float(last.split(",")[1])
    m = compute_metrics(problem, pm, cfg, final_loss=final_loss)
    (run_dir / "metrics.json").write_text(json.dumps(m, indent=1))
    print(f"metrics written to {run_dir / 'metrics.json'}")
    return 0


def cmd_oracle(args) -> int:
    problem = build_problem(RunConfig(problem=args.problem))
    out_dir = resolve_out_dir(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ref: dict = {"problem": problem.name}
    if isinstance(problem.reference, BoltzmannReference) and problem.n == 2:
        grid = oracle.default_grid(problem, args.grid_points)
        ref["expectations"] = oracle.reference_table(problem, grid, INTEGRANDS)
    if isinstance(problem.reference, GaussianMomentsReference):
        ts = np.linspace(0.0, problem.horizon, 11)
        ref["moments"] = {
            repr(float(t)): {
                "mean": problem.reference.moments(float(t))[0].tolist(),
                "var": problem.reference.moments(float(t))[1],
            } for t in ts
        }
    (out_dir / "oracle_reference.json").write_text(json.dumps(ref, indent=1))

    if args.particles > 0:
        rng_seed = args.seed
        if problem.time_dependent:
            steps = int(round(problem.horizon / args.dt))
            x0 = problem.initial_sampler(args.particles, derive_rng(rng_seed, "em-x0"))
        else:
            steps = args.steps
            x0 = derive_rng(rng_seed, "em-x0").normal(size=(args.particles, problem.n))
        cfg = oracle.EmConfig(dt=args.dt, steps=steps, particles=args.particles, seed=rng_seed)
        end, _ = oracle.euler_maruyama(problem, x0, cfg)
        write_samples_csv(out_dir / "em_endpoints.csv", end)
    print(f"oracle outputs written to {out_dir}")
    return 0


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpsampler",
                                description="Weak-form pushforward samplers for Fokker-Planck equations")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a sampler and write a run artifact")
    t.add_argument("--preset", help="built-in experiment card")
    t.add_argument("--config", help="path to a config.ini")
    t.add_argument("--set", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override a config value")
    t.add_argument("--out", help="output directory (overrides [output] dir)")
    t.set_defaults(fn=cmd_train)

    s = sub.add_parser("sample", help="draw samples from a trained run")
    s.add_argument("run_dir")
    s.add_argument("--n", type=int, default=10000)
    s.add_argument("--times", help="comma-separated times (time-dependent runs)")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", help="output directory (defaults to the run dir)")
    s.set_defaults(fn=cmd_sample)

    i = sub.add_parser("integrate", help="MC convergence table against quadrature references")
    i.add_argument("run_dir")
    i.add_argument("--functions", help="comma-separated integrand names (default: all)")
    i.add_argument("--sizes", default="100,1000,10000,100000")
    i.add_argument("--grid-points", type=int, default=501)
    i.set_defaults(fn=cmd_integrate)

    v = sub.add_parser("validate", help="recompute metrics.json for a run")
    v.add_argument("run_dir")
    v.set_defaults(fn=cmd_validate)

    o = sub.add_parser("oracle", help="reference quadrature tables and SDE endpoints")
    o.add_argument("problem")
    o.add_argument("--out", default="oracle_out")
    o.add_argument("--dt", type=float, default=1e-3)
    o.add_argument("--steps", type=int, default=20000)
    o.add_argument("--particles", type=int, default=20000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--grid-points", type=int, default=501)
    o.set_defaults(fn=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
