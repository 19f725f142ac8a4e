"""Delimited tables, plot-data series, and rendered figures for the CLI.

Tables are tab-separated with a header row; every figure a command renders
sits next to the table it was drawn from.  Numbers are formatted with %.6g so
identical runs produce byte-identical tables.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_table(path, rows, columns=None, delimiter="\t"):
    """Write dict rows as a delimited table; column order follows the first row."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(columns) + "\n")
        for row in rows:
            fh.write(delimiter.join(_format(row.get(c)) for c in columns) + "\n")
    return path


def format_mean_std(mean: float, std: float, digits: int = 3) -> str:
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def write_plot_data(path, series):
    """(x, mean, std) triples per labeled series, stacked in one table."""
    rows = []
    for label, triples in series.items():
        for x, mean, std in triples:
            rows.append({"series": label, "x": x, "mean": mean, "std": std})
    return write_table(path, rows, columns=["series", "x", "mean", "std"])


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_training_curves(record, path):
    epochs = [e["epoch"] for e in record.epochs]
    if not epochs:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.text(0.5, 0.5, "run collapsed before the first epoch", ha="center")
        return _finish(fig, path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(epochs, [e["train_loss"] for e in record.epochs], color="tab:red")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("training loss")
    ax1.grid(alpha=0.3)
    ax2.plot(epochs, [e["train_acc"] for e in record.epochs], label="train")
    ax2.plot(epochs, [e["val_acc"] for e in record.epochs], label="val")
    ax2.axvline(record.best_epoch, color="gray", linestyle="--", alpha=0.6)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("accuracy")
    ax2.legend()
    ax2.grid(alpha=0.3)
    return _finish(fig, path)


def render_sweep(rows, path, xlabel):
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    xs = [row["value"] for row in rows]
    ax.errorbar(
        xs,
        [row["mean"] for row in rows],
        yerr=[row["std"] for row in rows],
        marker="o",
        capsize=3,
    )
    ax.set_xlabel(xlabel)
    ax.set_ylabel("test accuracy")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def render_robustness(rows, path):
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharey=True)
    kinds = sorted({row["kind"] for row in rows})
    for ax, kind in zip(axes, kinds):
        for variant in sorted({row["variant"] for row in rows}):
            sub = [r for r in rows if r["kind"] == kind and r["variant"] == variant]
            sub.sort(key=lambda r: r["level"])
            ax.errorbar(
                [r["level"] for r in sub],
                [r["mean"] for r in sub],
                yerr=[r["std"] for r in sub],
                marker="o",
                capsize=3,
                label=variant,
            )
        ax.set_title(kind)
        ax.set_xlabel("corruption level")
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("test accuracy")
    axes[0].legend()
    for ax in axes[len(kinds):]:
        ax.set_visible(False)
    return _finish(fig, path)


def render_phase_diagram(cells, path):
    betas = sorted({c["beta_init"] for c in cells})
    ks = sorted({c["num_patterns"] for c in cells})
    grid = np.full((len(ks), len(betas)), np.nan)
    flags = np.zeros_like(grid, dtype=bool)
    for c in cells:
        i, j = ks.index(c["num_patterns"]), betas.index(c["beta_init"])
        grid[i, j] = c["mean"]
        flags[i, j] = bool(c["bimodal"])
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(betas), 1.0 + 0.9 * len(ks)))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis", vmin=0.0, vmax=1.0)
    for i in range(len(ks)):
        for j in range(len(betas)):
            if np.isfinite(grid[i, j]):
                mark = "†" if flags[i, j] else ""
                ax.text(
                    j, i, f"{grid[i, j]:.2f}{mark}", ha="center", va="center",
                    color="white", fontsize=8,
                )
    ax.set_xticks(range(len(betas)), [f"{b:g}" for b in betas])
    ax.set_yticks(range(len(ks)), [str(k) for k in ks])
    ax.set_xlabel("initial inverse temperature")
    ax.set_ylabel("patterns per bank")
    fig.colorbar(im, ax=ax, label="mean test accuracy")
    return _finish(fig, path)


def render_gate_analysis(rows, path):
    fig, ax1 = plt.subplots(figsize=(5.5, 3.6))
    levels = [row["level"] for row in rows]
    ax1.errorbar(
        levels,
        [row["gate_mean"] for row in rows],
        yerr=[row["gate_std"] for row in rows],
        marker="o",
        capsize=3,
        color="tab:blue",
        label="mean gate value",
    )
    ax1.set_xlabel("feature masking level")
    ax1.set_ylabel("mean gate value", color="tab:blue")
    ax1.set_ylim(0, 1)
    ax2 = ax1.twinx()
    ax2.errorbar(
        levels,
        [row["acc_mean"] for row in rows],
        yerr=[row["acc_std"] for row in rows],
        marker="s",
        capsize=3,
        color="tab:orange",
        label="accuracy",
    )
    ax2.set_ylabel("test accuracy", color="tab:orange")
    ax1.grid(alpha=0.3)
    return _finish(fig, path)


def render_operating_point(report, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    seeds = [row["seed"] for row in report["per_seed"]]
    ax.bar(range(len(seeds)), [row["product"] for row in report["per_seed"]], color="tab:blue")
    ax.axhline(2.0, color="tab:red", linestyle="--", label="convexity threshold")
    ax.set_xticks(range(len(seeds)), [str(s) for s in seeds])
    ax.set_xlabel("seed")
    ax.set_ylabel("temperature × squared pattern norm")
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    return _finish(fig, path)


def render_certificates(certs, path):
    fig, ax = plt.subplots(figsize=(6.5, 0.5 + 0.4 * len(certs)))
    names = [c.name for c in certs]
    slacks = [c.slack for c in certs]
    colors = ["tab:green" if c.passed else "tab:red" for c in certs]
    y = np.arange(len(certs))
    ax.barh(y, np.maximum(np.abs(slacks), 1e-16), color=colors, log=True)
    ax.set_yticks(y, names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("|slack| (log scale; green = pass)")
    return _finish(fig, path)
