"""Static report figures (PNG) for evaluation runs and sweeps."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_confusion(confusion: np.ndarray, path, title: str = "Cluster vs class counts") -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(confusion, aspect="auto", cmap="viridis")
    ax.set_xlabel("true class index")
    ax.set_ylabel("assigned cluster")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="samples")
    return _finish(fig, path)


def plot_trial_metrics(rows, path) -> Path:
    """Grouped bars of per-trial accuracies, one panel per criterion."""
    criteria = sorted({row["criterion"] for row in rows})
    fig, axes = plt.subplots(1, max(len(criteria), 1), figsize=(6 * max(len(criteria), 1), 4),
                             squeeze=False)
    for ax, criterion in zip(axes[0], criteria):
        subset = [r for r in rows if r["criterion"] == criterion]
        trials = [r["trial"] for r in subset]
        width = 0.27
        xs = np.arange(len(subset))
        for offset, key in enumerate(("acc_all", "acc_seen", "acc_novel")):
            values = [r[key] for r in subset]
            ax.bar(xs + (offset - 1) * width, values, width, label=key)
        ax.set_xticks(xs, [str(t) for t in trials])
        ax.set_xlabel("trial")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0, 1.05)
        ax.set_title(criterion)
        ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_sweep(aggregate_rows, path) -> Path:
    """Mean accuracy (with std bars) versus the swept axis."""
    if not aggregate_rows:
        raise ValueError("nothing to plot")
    axis = aggregate_rows[0]["axis"]
    criteria = sorted({row["criterion"] for row in aggregate_rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for criterion in criteria:
        subset = [r for r in aggregate_rows if r["criterion"] == criterion]
        xs = [r["value"] for r in subset]
        means = [r["acc_all_mean"] for r in subset]
        stds = [r["acc_all_std"] for r in subset]
        ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, label=criterion)
    ax.set_xlabel(axis)
    ax.set_ylabel("mean accuracy (all)")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_training_log(rows, path) -> Path:
    """Loss trajectories per training phase."""
    phases = sorted({row["phase"] for row in rows})
    fig, axes = plt.subplots(1, max(len(phases), 1), figsize=(5 * max(len(phases), 1), 4),
                             squeeze=False)
    for ax, phase in zip(axes[0], phases):
        subset = [r for r in rows if r["phase"] == phase]
        ax.plot([r["loss"] for r in subset])
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.set_title(phase)
        ax.grid(alpha=0.3)
    return _finish(fig, path)
