"""One renderer per figure kind.

Every renderer takes explicit input paths and an output image path, reads
only documented artifact formats, and is deterministic given identical
inputs. Analytical overlays always come from reference data recorded in
metrics.json, never from recomputed physics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import MalformedInput, read_csv, read_metrics, read_samples


def density_overlay_1d(samples_csv: Path, metrics_json: Path, out_png: Path,
                       max_sup_gap: float = 0.05) -> Path:
    """Histogram of 1D samples with the recorded reference curve.

    Refuses to render when the binned sample density deviates from the
    reference by more than max_sup_gap anywhere — a guard against pairing
    a samples file with the wrong run's metrics.
    """
    X = read_samples(samples_csv)[:, 0]
    m = read_metrics(metrics_json)
    if "reference_density" not in m:
        raise MalformedInput(f"{metrics_json}: no reference_density block")
    gx = np.asarray(m["reference_density"]["x"])
    ref = np.asarray(m["reference_density"]["density"])

    edges = np.linspace(gx[0], gx[-1], 81)
    hist, _ = np.histogram(X, bins=edges, density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    ref_at_centers = np.interp(centers, gx, ref)
    gap = float(np.max(np.abs(hist - ref_at_centers)))
    if gap > max_sup_gap:
        raise MalformedInput(
            f"{samples_csv}: binned density deviates from reference (sup gap {gap:.3f})"
        )

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(X, bins=edges, density=True, alpha=0.55, label="learned samples")
    ax.plot(gx, ref, "r-", lw=1.8, label="analytical")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def loss_curve(loss_csv: Path, out_png: Path) -> Path:
    cols = read_csv(loss_csv, ["epoch", "loss"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cols["epoch"], cols["loss"], lw=1.0)
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def scatter_2d(samples_csv: Path, out_png: Path) -> Path:
    X = read_samples(samples_csv)
    if X.shape[1] != 2:
        raise MalformedInput(f"{samples_csv}: scatter needs 2D samples")
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(X[:, 0], X[:, 1], s=2, alpha=0.4)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def heatmap_2d(samples_csv: Path, out_png: Path, metrics_json: Path | None = None) -> Path:
    """2D sample density histogram; adds the recorded analytical density
    side by side when metrics.json carries one."""
    X = read_samples(samples_csv)
    if X.shape[1] != 2:
        raise MalformedInput(f"{samples_csv}: heatmap needs 2D samples")
    ref = None
    if metrics_json is not None:
        m = read_metrics(metrics_json)
        ref = m.get("reference_density_2d")
    ncols = 2 if ref else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4.5), squeeze=False)
    ax = axes[0, 0]
    h = ax.hist2d(X[:, 0], X[:, 1], bins=80, cmap="viridis")
    fig.colorbar(h[3], ax=ax)
    ax.set_title("learned")
    ax.set_aspect("equal")
    if ref:
        ax2 = axes[0, 1]
        dens = np.asarray(ref["density"])
        im = ax2.imshow(dens.T, origin="lower", aspect="equal", cmap="viridis",
                        extent=(ref["x"][0], ref["x"][-1], ref["y"][0], ref["y"][-1]))
        fig.colorbar(im, ax=ax2)
        ax2.set_title("analytical")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def radial_angular(metrics_json: Path, out_png: Path) -> Path:
    m = read_metrics(metrics_json)
    if "radial_angular" not in m:
        raise MalformedInput(f"{metrics_json}: no radial_angular block")
    ra = m["radial_angular"]
    r_edges = np.asarray(ra["r_edges"])
    r_mass = np.asarray(ra["r_mass"])
    t_edges = np.asarray(ra["theta_edges"])
    t_mass = np.asarray(ra["theta_mass"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    widths = np.diff(r_edges)
    ax1.bar(r_edges[:-1], r_mass / widths, width=widths, align="edge", alpha=0.7)
    ax1.set_xlabel("r")
    ax1.set_ylabel("p(r)")
    tw = np.diff(t_edges)
    ax2.bar(t_edges[:-1], t_mass / tw, width=tw, align="edge", alpha=0.7)
    ax2.axhline(1.0 / (2 * np.pi), color="r", ls="--", lw=1.2, label="uniform")
    ax2.set_xlabel("theta")
    ax2.set_ylabel("p(theta)")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def mc_convergence(mc_csv: Path, out_png: Path) -> Path:
    """Estimates with +-2 SE bars against the reference value per function."""
    cols = read_csv(mc_csv, ["function", "N", "estimate", "std_error", "reference"])
    names = sorted(set(cols["function"].tolist()))
    ncols = min(3, len(names))
    nrows = (len(names) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3.2 * nrows), squeeze=False)
    for i, name in enumerate(names):
        ax = axes[i // ncols][i % ncols]
        mask = cols["function"] == name
        N = cols["N"][mask]
        est = cols["estimate"][mask]
        se = cols["std_error"][mask]
        order = np.argsort(N)
        ax.errorbar(N[order], est[order], yerr=2 * se[order], fmt="o-", capsize=3,
                    label="MC estimate")
        ref = cols["reference"][mask][0]
        ax.axhline(ref, color="r", ls="--", lw=1.2, label="reference")
        ax.set_xscale("log")
        ax.set_title(name)
        ax.set_xlabel("N")
        if i == 0:
            ax.legend(fontsize=8)
    for j in range(len(names), nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def moment_evolution(metrics_json: Path, out_png: Path) -> Path:
    """Learned vs analytical mean and variance over time (first dims)."""
    m = read_metrics(metrics_json)
    if "error_table" not in m or "reference_moments" not in m:
        raise MalformedInput(f"{metrics_json}: no time-evolution blocks")
    et = m["error_table"]
    rm = m["reference_moments"]
    times = np.asarray(et["times"])
    lm = np.asarray(et["learned_mean"])
    lv = np.asarray(et["learned_var"])
    rt = np.asarray(rm["t"])
    rmean = np.asarray(rm["mean"])
    rvar = np.asarray(rm["var"])
    dims = min(3, lm.shape[1])
    fig, axes = plt.subplots(2, dims, figsize=(4 * dims, 6), squeeze=False)
    for j in range(dims):
        axes[0][j].plot(rt, rmean[:, j], "r--", label="analytical")
        axes[0][j].plot(times, lm[:, j], "bo-", label="learned")
        axes[0][j].set_title(f"mean, dim {j + 1}")
        axes[0][j].set_xlabel("t")
        axes[1][j].plot(rt, rvar, "r--", label="analytical")
        axes[1][j].plot(times, lv[:, j], "bo-", label="learned")
        axes[1][j].set_title(f"variance, dim {j + 1}")
        axes[1][j].set_xlabel("t")
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)


def error_heatmap(metrics_json: Path, out_png: Path) -> Path:
    """Mean absolute error across dimensions (rows) and times (columns)."""
    m = read_metrics(metrics_json)
    if "error_table" not in m:
        raise MalformedInput(f"{metrics_json}: no error_table block")
    et = m["error_table"]
    err = np.asarray(et["mean_abs_err"]).T  # dims x times
    times = et["times"]
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(10, 4),
                                  gridspec_kw={"width_ratios": [2, 1]})
    im = ax.imshow(err, aspect="auto", cmap="viridis", origin="lower")
    ax.set_xticks(range(len(times)), [f"{t:g}" for t in times])
    ax.set_xlabel("t")
    ax.set_ylabel("dimension")
    fig.colorbar(im, ax=ax, label="|mean error|")
    ax2.barh(np.arange(err.shape[0]) + 1, err.mean(axis=1), height=0.8)
    ax2.set_xlabel("time-averaged |mean error|")
    ax2.set_ylabel("dimension")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return Path(out_png)
