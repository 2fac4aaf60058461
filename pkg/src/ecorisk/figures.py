"""Matplotlib renderings of the report series, written next to their CSVs.

Every figure is a display of data that is also emitted as CSV; the CSV stays
the source of truth and these files exist for quick inspection.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def rank_curve(values: list[float], ylabel: str, title: str,
               path: str | Path) -> Path:
    """Rank-ordered values on log axes (concentration curves)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ranks = range(1, len(values) + 1)
    ax.plot(ranks, values, marker=".", linestyle="-", linewidth=1, markersize=3)
    ax.set_xscale("log")
    positive = [v for v in values if v > 0]
    if positive and max(positive) / min(positive) > 50:
        ax.set_yscale("log")
    ax.set_xlabel("rank")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def rank_scatter(x_ranks: list[int], y_ranks: list[int], labels: list[str],
                 xlabel: str, ylabel: str, title: str, path: str | Path,
                 annotate_top: int = 10) -> Path:
    """Rank-vs-rank comparison of two library orderings."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.scatter(x_ranks, y_ranks, s=18, alpha=0.7)
    upper = max(max(x_ranks, default=1), max(y_ranks, default=1))
    ax.plot([1, upper], [1, upper], linestyle="--", linewidth=1, color="gray")
    for x, y, label in zip(x_ranks, y_ranks, labels):
        if min(x, y) <= annotate_top:
            ax.annotate(label, (x, y), fontsize=7,
                        textcoords="offset points", xytext=(3, 3))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def intervention_curves(curves, path: str | Path) -> Path:
    """Global risk against developers added, one line per strategy."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve in curves:
        ks = [k for k, _ in curve.points]
        gs = [g for _, g in curve.points]
        ax.plot(ks, gs, marker="o", markersize=3, linewidth=1, label=curve.strategy)
        ax.axhline(curve.baseline, linestyle=":", linewidth=0.8, color="gray")
    ax.set_xscale("log")
    ax.set_xlabel("developers added")
    ax.set_ylabel("global systemic risk")
    ax.set_title("intervention comparison")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
