"""Command-line entry: render one figure kind, or everything a run
directory supports.

    fpplots <kind> <run_dir> <out_dir>
    fpplots all <run_dir> <out_dir>

Kinds: density1d, loss, scatter2d, heatmap2d, radial_angular, mc,
moments, error_heatmap.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures
from .io import MalformedInput, read_metrics


def _samples_file(run_dir: Path) -> Path:
    direct = run_dir / "samples.csv"
    if direct.exists():
        return direct
    timed = sorted(run_dir.glob("samples_t*.csv"))
    if timed:
        return timed[-1]
    raise MalformedInput(f"{run_dir}: no samples CSV found")


def render_kind(kind: str, run_dir: Path, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics = run_dir / "metrics.json"
    if kind == "density1d":
        return figures.density_overlay_1d(_samples_file(run_dir), metrics,
                                          out_dir / "density1d.png")
    if kind == "loss":
        return figures.loss_curve(run_dir / "loss_history.csv", out_dir / "loss.png")
    if kind == "scatter2d":
        return figures.scatter_2d(_samples_file(run_dir), out_dir / "scatter2d.png")
    if kind == "heatmap2d":
        m = metrics if metrics.exists() else None
        return figures.heatmap_2d(_samples_file(run_dir), out_dir / "heatmap2d.png", m)
    if kind == "radial_angular":
        return figures.radial_angular(metrics, out_dir / "radial_angular.png")
    if kind == "mc":
        return figures.mc_convergence(run_dir / "mc_convergence.csv", out_dir / "mc.png")
    if kind == "moments":
        return figures.moment_evolution(metrics, out_dir / "moments.png")
    if kind == "error_heatmap":
        return figures.error_heatmap(metrics, out_dir / "error_heatmap.png")
    raise MalformedInput(f"unknown figure kind {kind!r}")


def applicable_kinds(run_dir: Path) -> list[str]:
    """Figure kinds this run directory has the inputs for."""
    kinds = []
    metrics = {}
    if (run_dir / "metrics.json").exists():
        metrics = read_metrics(run_dir / "metrics.json")
    if (run_dir / "loss_history.csv").exists():
        kinds.append("loss")
    has_samples = (run_dir / "samples.csv").exists() or list(run_dir.glob("samples_t*.csv"))
    n = metrics.get("n")
    if has_samples and n == 1 and "reference_density" in metrics:
        kinds.append("density1d")
    if has_samples and n == 2:
        kinds += ["scatter2d", "heatmap2d"]
    if "radial_angular" in metrics:
        kinds.append("radial_angular")
    if (run_dir / "mc_convergence.csv").exists():
        kinds.append("mc")
    if "error_table" in metrics:
        kinds += ["moments", "error_heatmap"]
    return kinds


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="fpplots", description=__doc__)
    p.add_argument("kind", help="figure kind, or 'all'")
    p.add_argument("run_dir", type=Path)
    p.add_argument("out_dir", type=Path)
    args = p.parse_args(argv)
    try:
        if args.kind == "all":
            rendered = [render_kind(k, args.run_dir, args.out_dir)
                        for k in applicable_kinds(args.run_dir)]
            if not rendered:
                print("nothing to render", file=sys.stderr)
                return 1
            for path in rendered:
                print(path)
        else:
            print(render_kind(args.kind, args.run_dir, args.out_dir))
        return 0
    except MalformedInput as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
