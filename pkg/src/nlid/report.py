"""Model explanation and report rendering: per-class most-informative
features, text confusion matrices, and the machine-readable metric format."""
from __future__ import annotations

from dataclasses import dataclass

from .ensemble import ClassifierView
from .errors import DataError
from .metrics import ConfusionMatrix, EvalReport


@dataclass(frozen=True)
class FeatureRanking:
    """Features with the largest positive weight for one class, descending."""

    label: str
    entries: tuple[tuple[str, float], ...]


def top_features(view: ClassifierView, label: str, k: int) -> FeatureRanking:
    """Rank a class's features by its one-vs-rest weights, bias excluded.

    Only strictly positive weights are reported; ties order alphabetically.
    ``k`` larger than the number of such features returns them all.
    """
    if view.tfidf is None:
        raise DataError(f"no vocabulary: view '{view.name}' has dense features")
    if label not in view.model.classes:
        raise DataError(f"unknown label '{label}'")
    if k < 0:
        raise DataError(f"k must be nonnegative, got {k}")
    row = view.model.weights[view.model.classes.index(label), :-1]
    vocab = view.tfidf.vocab
    candidates = [(float(row[t]), vocab.feature_of[t]) for t in range(vocab.size) if row[t] > 0.0]
    candidates.sort(key=lambda item: (-item[0], item[1]))
    entries = tuple((feature, weight) for weight, feature in candidates[:k])
    return FeatureRanking(label=label, entries=entries)


def ranking_tsv_lines(rankings: list[FeatureRanking]) -> list[str]:
    """Flatten rankings into label/rank/feature/weight TSV rows."""
    lines = ["label\trank\tfeature\tweight"]
    for ranking in rankings:
        for rank, (feature, weight) in enumerate(ranking.entries, start=1):
            lines.append(f"{ranking.label}\t{rank}\t{feature}\t{weight!r}")
    return lines


def render_confusion(matrix: ConfusionMatrix) -> str:
    """Aligned text grid: gold labels down the stub, predictions across."""
    labels = matrix.labels
    stub_width = max(len(lbl) for lbl in labels)
    col_widths = [
        max(len(lbl), max(len(str(int(c))) for c in matrix.counts[:, j]))
        for j, lbl in enumerate(labels)
    ]
    header = " " * stub_width + "  " + "  ".join(
        lbl.rjust(w) for lbl, w in zip(labels, col_widths)
    )
    lines = [header]
    for i, lbl in enumerate(labels):
        cells = "  ".join(
            str(int(matrix.counts[i, j])).rjust(col_widths[j]) for j in range(len(labels))
        )
        lines.append(f"{lbl.ljust(stub_width)}  {cells}")
    return "\n".join(lines)


def render_eval_report(report: EvalReport, matrix: ConfusionMatrix) -> str:
    """Human-readable summary: headline metrics, per-class table, confusion."""
    lines = [
        f"instances      {matrix.total}",
        f"accuracy       {report.accuracy:.4f}",
        f"macro F1       {report.macro_f1:.4f}",
        "",
        "class      precision  recall     f1",
    ]
    for label in matrix.labels:
        scores = report.per_class[label]
        lines.append(
            f"{label:<10} {scores.precision:>9.4f}  {scores.recall:>6.4f}  {scores.f1:>6.4f}"
        )
    lines.append("")
    lines.append("confusion matrix (rows = gold, columns = predicted)")
    lines.append(render_confusion(matrix))
    return "\n".join(lines) + "\n"


def report_kv_lines(report: EvalReport, matrix: ConfusionMatrix) -> list[str]:
    """Flat key<TAB>value lines covering every reported quantity."""
    lines = [
        f"n\t{matrix.total}",
        f"accuracy\t{report.accuracy!r}",
        f"macro_f1\t{report.macro_f1!r}",
    ]
    for label in matrix.labels:
        scores = report.per_class[label]
        lines.append(f"precision.{label}\t{scores.precision!r}")
        lines.append(f"recall.{label}\t{scores.recall!r}")
        lines.append(f"f1.{label}\t{scores.f1!r}")
    for i, g in enumerate(matrix.labels):
        for j, p in enumerate(matrix.labels):
            lines.append(f"confusion.{g}.{p}\t{int(matrix.counts[i, j])}")
    return lines
