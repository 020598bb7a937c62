"""Loading, validation, and stratified splitting of multi-view corpora.

A corpus binds together up to three views of each test taker: an essay, a
speech transcript, and an optional dense acoustic vector. Views live in
separate TSV files keyed by instance id; the labels file defines corpus
membership and instance order.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DataError

TEXT_VIEW_HEADER = "id\tpayload"
LABELS_HEADER = "id\tlabel"


@dataclass(frozen=True)
class Instance:
    """One test taker: both text views, an optional dense vector, and a label."""

    id: str
    essay: str
    transcript: str
    ivector: tuple[float, ...] | None
    label: str


@dataclass(frozen=True)
class Corpus:
    instances: tuple[Instance, ...]
    labels: tuple[str, ...]
    ivector_dim: int | None

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    @staticmethod
    def from_instances(instances: Sequence[Instance]) -> "Corpus":
        """Build a corpus, enforcing id uniqueness and ivector consistency."""
        if not instances:
            raise DataError("empty corpus")
        seen: set[str] = set()
        for inst in instances:
            if inst.id in seen:
                raise DataError(f"duplicate id '{inst.id}'")
            seen.add(inst.id)
        dims = {len(inst.ivector) for inst in instances if inst.ivector is not None}
        if len(dims) > 1:
            raise DataError(f"dimension mismatch: ivector dimensions {sorted(dims)}")
        if dims and any(inst.ivector is None for inst in instances):
            missing = next(i.id for i in instances if i.ivector is None)
            raise DataError(f"view mismatch: id '{missing}' missing from ivectors")
        labels = tuple(sorted({inst.label for inst in instances}))
        dim = dims.pop() if dims else None
        return Corpus(instances=tuple(instances), labels=labels, ivector_dim=dim)


@dataclass(frozen=True)
class FoldAssignment:
    """Stratified fold indices in [0, k), keyed by instance id."""

    k: int
    fold_of: Mapping[str, int]


def _read_tsv(path: str | Path, expected_header: str) -> dict[str, str]:
    """Read an id-keyed two-column TSV, returning an insertion-ordered map."""
    path = Path(path)
    rows: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != expected_header:
            raise DataError(
                f"bad header in {path}: expected {expected_header!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if "\t" not in line:
                raise DataError(f"malformed row at {path}:{lineno}: no tab separator")
            key, payload = line.split("\t", 1)
            if key in rows:
                raise DataError(f"duplicate id '{key}' in {path}")
            rows[key] = payload
    return rows


def _parse_ivector(raw: str, instance_id: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise DataError(f"unparseable ivector for id '{instance_id}': {exc}") from exc


def load_corpus(
    essays_path: str | Path,
    transcripts_path: str | Path,
    ivectors_path: str | Path | None,
    labels_path: str | Path,
) -> Corpus:
    """Load and cross-validate the view files into a single corpus.

    The labels file fixes membership and order. Every view file must cover
    exactly the same id set; any straggler or missing id raises a
    view-mismatch error naming the offending id.
    """
    labels = _read_tsv(labels_path, LABELS_HEADER)
    if not labels:
        raise DataError(f"empty corpus: no rows in {labels_path}")
    essays = _read_tsv(essays_path, TEXT_VIEW_HEADER)
    transcripts = _read_tsv(transcripts_path, TEXT_VIEW_HEADER)
    ivectors = (
        _read_tsv(ivectors_path, TEXT_VIEW_HEADER) if ivectors_path is not None else None
    )

    views = {"essays": essays, "transcripts": transcripts}
    if ivectors is not None:
        views["ivectors"] = ivectors
    label_ids = set(labels)
    for view_name, rows in views.items():
        for missing in sorted(label_ids - set(rows)):
            raise DataError(f"view mismatch: id '{missing}' missing from {view_name}")
        for extra in sorted(set(rows) - label_ids):
            raise DataError(f"view mismatch: id '{extra}' missing from labels")

    expected_dim: int | None = None
    instances = []
    for inst_id, label in labels.items():
        vec: tuple[float, ...] | None = None
        if ivectors is not None:
            vec = _parse_ivector(ivectors[inst_id], inst_id)
            if expected_dim is None:
                expected_dim = len(vec)
            elif len(vec) != expected_dim:
                raise DataError(
                    f"dimension mismatch: id '{inst_id}' has ivector of length "
                    f"{len(vec)}, expected {expected_dim}"
                )
        instances.append(
            Instance(
                id=inst_id,
                essay=essays[inst_id],
                transcript=transcripts[inst_id],
                ivector=vec,
                label=label,
            )
        )
    return Corpus.from_instances(instances)


def stratified_folds(corpus: Corpus, k: int, seed: int) -> FoldAssignment:
    """Assign each instance to one of ``k`` folds, stratified by label.

    Within each class the instances are shuffled with a seeded generator and
    dealt round-robin, so per-class fold sizes differ by at most one and the
    assignment is a pure function of (corpus, k, seed).
    """
    if k < 2:
        raise DataError(f"fold count must be at least 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_of: dict[str, int] = {}
    by_label: dict[str, list[str]] = {label: [] for label in corpus.labels}
    for inst in corpus:
        by_label[inst.label].append(inst.id)
    for label in corpus.labels:
        ids = by_label[label]
        if len(ids) < k:
            raise DataError(
                f"insufficient class support: class '{label}' has {len(ids)} "
                f"instances for {k} folds"
            )
        order = rng.permutation(len(ids))
        for slot, idx in enumerate(order):
            fold_of[ids[idx]] = slot % k
    return FoldAssignment(k=k, fold_of=fold_of)


def split(corpus: Corpus, folds: FoldAssignment, held_out: int) -> tuple[Corpus, Corpus]:
    """Partition the corpus into (train, dev) around one held-out fold.

    Both halves preserve corpus order; together they cover the corpus exactly.
    """
    if not 0 <= held_out < folds.k:
        raise DataError(
            f"fold index {held_out} out of range for {folds.k}-fold assignment"
        )
    train = [inst for inst in corpus if folds.fold_of[inst.id] != held_out]
    dev = [inst for inst in corpus if folds.fold_of[inst.id] == held_out]
    return Corpus.from_instances(train), Corpus.from_instances(dev)
