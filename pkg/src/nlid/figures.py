"""Matplotlib renderings written next to the delimited report files."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ConfusionMatrix
from .report import FeatureRanking


def save_confusion_heatmap(matrix: ConfusionMatrix, path: str | Path) -> None:
    """Render the confusion counts as an annotated heatmap PNG."""
    labels = matrix.labels
    n = len(labels)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * n + 2.0),) * 2)
    image = ax.imshow(matrix.counts, cmap="Blues")
    ax.set_xticks(range(n), labels, rotation=90, fontsize=8)
    ax.set_yticks(range(n), labels, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    if n <= 15:
        peak = matrix.counts.max() if matrix.counts.size else 0
        for i in range(n):
            for j in range(n):
                count = int(matrix.counts[i, j])
                color = "white" if peak and count > 0.5 * peak else "black"
                ax.text(j, i, str(count), ha="center", va="center", fontsize=7, color=color)
    fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_feature_ranking_chart(rankings: list[FeatureRanking], path: str | Path) -> None:
    """One horizontal bar panel per class, weights descending top to bottom."""
    n = len(rankings)
    ncols = min(3, n) or 1
    nrows = math.ceil(n / ncols) if n else 1
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.2 * ncols, 2.6 * nrows), squeeze=False
    )
    for slot, ranking in enumerate(rankings):
        ax = axes[slot // ncols][slot % ncols]
        features = [feature for feature, _ in ranking.entries]
        weights = [weight for _, weight in ranking.entries]
        pos = np.arange(len(features))[::-1]
        ax.barh(pos, weights, color="#39648c")
        ax.set_yticks(pos, [f.replace(" ", "␣") for f in features], fontsize=7)
        ax.set_title(ranking.label, fontsize=9)
        ax.tick_params(axis="x", labelsize=7)
    for slot in range(n, nrows * ncols):
        axes[slot // ncols][slot % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
