"""Scoring: accuracy, per-class P/R/F1, macro-F1, confusion matrices, the
uniform-random baseline, and McNemar's paired significance test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts with gold labels on rows and predicted labels on columns."""

    labels: tuple[str, ...]
    counts: np.ndarray  # (L, L) int64
    total: int


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    per_class: Mapping[str, ClassScores]


@dataclass(frozen=True)
class McNemarResult:
    b: int  # first system correct, second wrong
    c: int  # first system wrong, second correct
    statistic: float
    p_value: float
    method: str


def confusion(
    gold: Sequence[str], pred: Sequence[str], label_set: Sequence[str]
) -> ConfusionMatrix:
    """Tally gold/pred pairs into a matrix over ``label_set`` (order kept)."""
    if len(gold) != len(pred):
        raise DataError(f"length mismatch: {len(gold)} gold vs {len(pred)} predictions")
    if not gold:
        raise DataError("empty prediction stream")
    labels = tuple(label_set)
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in index:
            raise DataError(f"unknown label '{g}' in gold stream")
        if p not in index:
            raise DataError(f"unknown label '{p}' in prediction stream")
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(labels=labels, counts=counts, total=len(gold))


def score(matrix: ConfusionMatrix) -> EvalReport:
    """Accuracy, per-class precision/recall/F1 (0/0 counts as 0), macro-F1."""
    counts = matrix.counts
    accuracy = float(np.trace(counts)) / matrix.total
    per_class: dict[str, ClassScores] = {}
    f1_values = []
    for i, label in enumerate(matrix.labels):
        tp = float(counts[i, i])
        predicted = float(counts[:, i].sum())
        actual = float(counts[i, :].sum())
        precision = tp / predicted if predicted > 0 else 0.0
        recall = tp / actual if actual > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[label] = ClassScores(precision=precision, recall=recall, f1=f1)
        f1_values.append(f1)
    return EvalReport(
        accuracy=accuracy,
        macro_f1=float(np.mean(f1_values)),
        per_class=per_class,
    )


def random_baseline(
    label_set: Sequence[str],
    n: int = 0,
    seed: int = 0,
    sampled: bool = False,
) -> EvalReport:
    """Uniform-guessing baseline over the label set.

    Expected mode (default) reports accuracy exactly 1/L, with per-class
    precision/recall/F1 all 1/L as they come out for balanced gold labels.
    Sampled mode draws ``n`` uniform predictions against a balanced gold
    stream and scores them.
    """
    labels = tuple(label_set)
    if not labels:
        raise DataError("empty label set")
    L = len(labels)
    if not sampled:
        rate = 1.0 / L
        per_class = {lbl: ClassScores(rate, rate, rate) for lbl in labels}
        return EvalReport(accuracy=rate, macro_f1=rate, per_class=per_class)
    if n < 1:
        raise DataError(f"sampled baseline needs n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    gold = [labels[i % L] for i in range(n)]
    pred = [labels[j] for j in rng.integers(0, L, size=n)]
    return score(confusion(gold, pred, labels))


def mcnemar(
    gold: Sequence[str],
    pred_a: Sequence[str],
    pred_b: Sequence[str],
    exact: bool = False,
) -> McNemarResult:
    """Paired test on the discordant counts of two systems.

    The default statistic is (|b - c| - 1)^2 / (b + c) with continuity
    correction (0 when b + c = 0) against chi-squared with one degree of
    freedom. ``exact=True`` switches the p-value to the two-sided binomial
    tail, preferable when b + c is small.
    """
    if len(gold) != len(pred_a) or len(gold) != len(pred_b):
        raise DataError(
            f"length mismatch: {len(gold)} gold vs {len(pred_a)}/{len(pred_b)} predictions"
        )
    if not gold:
        raise DataError("empty prediction stream")
    b = sum(1 for g, a, p in zip(gold, pred_a, pred_b) if a == g and p != g)
    c = sum(1 for g, a, p in zip(gold, pred_a, pred_b) if a != g and p == g)
    if b + c == 0:
        statistic = 0.0
    else:
        statistic = (abs(b - c) - 1) ** 2 / (b + c)
    if exact:
        n = b + c
        k = max(b, c)
        tail = sum(math.comb(n, i) for i in range(k, n + 1)) * 0.5**n if n else 1.0
        p_value = min(1.0, 2.0 * tail)
        method = "exact"
    else:
        p_value = math.erfc(math.sqrt(statistic / 2.0))
        method = "chi2"
    return McNemarResult(b=b, c=c, statistic=statistic, p_value=p_value, method=method)
