"""Report rendering: op-composition histograms and predictor-quality curves
as PNG figures with CSV companions, plus the plain-text training table."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ops import OP_NAMES
from .policy import CompositePolicy, policy_op_histogram


def write_histogram_csv(policy: CompositePolicy, path: str) -> None:
    """Per-label op proportions, one row per (label, op)."""
    hist = policy_op_histogram(policy)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "op", "proportion"])
        for row, lp in enumerate(policy.policies):
            for op, name in enumerate(OP_NAMES):
                writer.writerow([lp.label, name, f"{hist[row, op]:.6f}"])


def render_histogram_png(policy: CompositePolicy, path: str,
                         title: str = "Policy composition by label") -> None:
    """Stacked per-label bars showing each op's share of the policy."""
    hist = policy_op_histogram(policy)
    labels = [p.label for p in policy.policies]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(labels) + 3), 4.5))
    bottom = np.zeros(len(labels))
    cmap = plt.get_cmap("tab20")
    for op in range(len(OP_NAMES)):
        ax.bar([str(y) for y in labels], hist[:, op], bottom=bottom,
               label=OP_NAMES[op], color=cmap(op % 20), width=0.7)
        bottom += hist[:, op]
    ax.set_xlabel("label")
    ax.set_ylabel("proportion of op slots")
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.legend(bbox_to_anchor=(1.02, 1), loc="upper left", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_metrics_csv(rows, path: str) -> None:
    """rows: (iteration, PredictorMetrics) pairs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "spearman", "mae", "train_size",
                         "test_size", "degenerate"])
        for t, m in rows:
            writer.writerow([t, f"{m.spearman:.6f}", f"{m.mae:.6f}",
                             m.train_size, m.test_size, int(m.degenerate)])


def render_metrics_png(rows, path: str,
                       title: str = "Predictor holdout quality") -> None:
    iters = [t for t, _ in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(iters, [m.spearman for _, m in rows], marker="o")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("Spearman rank correlation")
    ax1.set_ylim(-1, 1)
    ax1.grid(True, alpha=0.3)
    ax2.plot(iters, [m.mae for _, m in rows], marker="o", color="tab:red")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("MAE")
    ax2.grid(True, alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def format_train_table(report: dict) -> str:
    """Fixed-width text table for a train_with_policy report."""
    lines = []
    overall = report["overall"]
    lines.append(f"mode: {report['mode']}    seeds: {report['seeds']}")
    lines.append(f"overall accuracy: {overall['mean']:.4f} "
                 f"+/- {overall['std']:.4f}")
    lines.append("")
    lines.append(f"{'label':>6s} {'mean':>8s} {'std':>8s}")
    for row in report["per_class"]:
        lines.append(f"{row['label']:>6d} {row['mean']:>8.4f} {row['std']:>8.4f}")
    runs = " ".join(f"{v:.4f}" for v in overall["runs"])
    lines.append("")
    lines.append(f"per-seed overall: {runs}")
    if report.get("config_digest"):
        lines.append(f"config digest: {report['config_digest']}")
    return "\n".join(lines) + "\n"
