"""Figure rendering for pipeline reports.

Everything renders through the Agg backend straight to PNG files placed
alongside the delimited outputs; no display server, no timestamps, so a
rerun with identical data produces identical bytes.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset_builder import PairCountMatrix

# strip the Software tag so PNG bytes do not depend on the library version
_PNG_META = {"Software": None}


def save_pair_count_chart(matrix: PairCountMatrix, path: str | Path) -> None:
    """Bubble grid of sample counts: row = article language, column =
    summary language, bubble area proportional to count."""
    langs = matrix.languages
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(langs) + 2), max(3.5, 0.6 * len(langs) + 1.5)))
    xs, ys, sizes, labels = [], [], [], []
    peak = max(matrix.counts.values(), default=0)
    for i, src in enumerate(langs):
        for j, tgt in enumerate(langs):
            n = matrix.counts.get((src, tgt), 0)
            if n == 0:
                continue
            xs.append(j)
            ys.append(i)
            sizes.append(900.0 * n / peak)
            labels.append(str(n))
    ax.scatter(xs, ys, s=sizes, alpha=0.6, edgecolors="black", linewidths=0.5)
    for x, y, text in zip(xs, ys, labels):
        ax.annotate(text, (x, y), ha="center", va="center", fontsize=7)
    ax.set_xticks(range(len(langs)), langs)
    ax.set_yticks(range(len(langs)), langs)
    ax.set_xlabel("summary language")
    ax.set_ylabel("article language")
    ax.set_title(f"samples per language pair (total {matrix.total})")
    ax.invert_yaxis()
    ax.set_xlim(-0.8, len(langs) - 0.2)
    ax.set_ylim(len(langs) - 0.2, -0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def save_correlation_scatter(
    xs: list[float],
    ys: list[float],
    xlabel: str,
    ylabel: str,
    path: str | Path,
    pearson: float | None = None,
    spearman: float | None = None,
) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(xs, ys, s=14, alpha=0.65, edgecolors="none")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    title = f"{ylabel} vs {xlabel}"
    parts = []
    if pearson is not None and not math.isnan(pearson):
        parts.append(f"pearson {pearson:.3f}")
    if spearman is not None and not math.isnan(spearman):
        parts.append(f"spearman {spearman:.3f}")
    if parts:
        title += " (" + ", ".join(parts) + ")"
    ax.set_title(title, fontsize=10)
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
