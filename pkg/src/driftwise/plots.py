"""Matplotlib figures rendered to files alongside the delimited reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=120, bbox_inches="tight", metadata={"Date": None})


def _style_axis(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.grid(True, alpha=0.25, linewidth=0.5)


def plot_importance_series(report, path) -> None:
    """Per-feature importance over time; dashed step line marks the
    tumbling-window baseline, a vertical line marks the drift point."""
    labels = [k for k in report.series if k.startswith("ipfi_")]
    fig, axes = plt.subplots(1, max(len(labels), 1), figsize=(7 * max(len(labels), 1), 4.2),
                             squeeze=False, sharey=True)
    interval_times, interval_matrix = report.series.get("interval_pfi", ([], np.empty((0, 0))))
    for ax, label in zip(axes[0], labels):
        times, matrix = report.series[label]
        if len(times):
            # color the strongest features, grey out the rest
            order = np.argsort(matrix.mean(axis=0))[::-1]
            for rank, j in enumerate(order):
                kw = {"lw": 1.4, "zorder": 3} if rank < 4 else \
                    {"lw": 0.8, "color": "0.75", "zorder": 2}
                ax.plot(times, matrix[:, j], label=report.feature_names[j] if rank < 4 else None,
                        **kw)
        if len(interval_times):
            for j in range(interval_matrix.shape[1]):
                ax.step(interval_times, interval_matrix[:, j], where="post", ls="--",
                        color="0.3", lw=0.9, zorder=4,
                        label="interval baseline" if j == 0 else None)
        if report.drift_position is not None:
            ax.axvline(report.drift_position, color="crimson", ls=":", lw=1.2, zorder=5,
                       label="drift")
        ax.set_title(label)
        ax.set_xlabel("t")
        _style_axis(ax)
    axes[0][0].set_ylabel("importance")
    axes[0][0].legend(loc="upper left", fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_final_importance(report, path) -> None:
    """Static run: per-feature box of the streaming finals across shuffles,
    with the batch reference overlaid as markers."""
    labels = [k for k in report.series if k.startswith("ipfi_")]
    names = report.feature_names
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(1.1 * len(names) + 3, 4.2))
    width = 0.8 / max(len(labels), 1)
    for i, label in enumerate(labels):
        _, matrix = report.series[label]
        positions = x - 0.4 + width * (i + 0.5)
        ax.boxplot(matrix, positions=positions, widths=width * 0.85,
                   manage_ticks=False,
                   boxprops={"color": f"C{i}"}, whiskerprops={"color": f"C{i}"},
                   capprops={"color": f"C{i}"}, medianprops={"color": f"C{i}"})
        ax.plot([], [], color=f"C{i}", label=label)
    if "batch_pfi" in report.series:
        _, ref = report.series["batch_pfi"]
        ax.plot(x, ref[0], "k*", markersize=9, label="batch_pfi", zorder=5)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=35, ha="right")
    ax.set_ylabel("importance")
    ax.legend(fontsize=8, frameon=False)
    _style_axis(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_bias_study(study, path) -> None:
    """Empirical mean with a 3-standard-error band against the analytic
    saturation curve."""
    rows = sorted(study.rows, key=lambda r: r.checkpoint)
    steps = np.array([r.checkpoint for r in rows])
    means = np.array([r.mean for r in rows])
    variances = np.array([r.variance for r in rows])
    phi = study.summary.get("phi", np.nan)
    analytic = phi - np.array([r.analytic_bias for r in rows])
    n_reps = len(study.summary.get("standardized_deviation_by_checkpoint", {})) or 1
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    se = np.sqrt(variances / max(n_reps, 1))
    ax.errorbar(steps, means, yerr=3 * se, fmt="o", capsize=3, label="empirical mean +- 3 SE")
    grid = np.linspace(max(steps.min(), 1), steps.max(), 200)
    alpha = rows[0].alpha
    ax.plot(grid, phi * (1.0 - (1.0 - alpha) ** grid), "k--", lw=1.0,
            label="analytic saturation")
    ax.axhline(phi, color="0.5", lw=0.8, ls=":", label="true importance")
    ax.set_xlabel("explained steps")
    ax.set_ylabel("estimate")
    ax.legend(fontsize=8, frameon=False)
    _style_axis(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_variance_study(study, path) -> None:
    """Across-replication variance versus alpha, one line per reservoir size."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    sizes = sorted({r.reservoir_size for r in study.rows})
    for size in sizes:
        rows = sorted((r for r in study.rows if r.reservoir_size == size),
                      key=lambda r: r.alpha)
        ax.plot([r.alpha for r in rows], [r.variance for r in rows], "o-",
                label=f"{rows[0].sampler}, L={size}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("alpha")
    ax.set_ylabel("variance of settled estimate")
    ax.legend(fontsize=8, frameon=False)
    _style_axis(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
