"""Feature extraction: n-gram counting, TF-IDF weighting, sparse vectors.

Character n-grams are taken over the text padded with a single space on each
side, so word-boundary grams ("i think ") are first-class features. Word
n-grams join whitespace tokens. Dense acoustic vectors pass through
unweighted.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

CHAR_NGRAM = "char_ngram"
WORD_NGRAM = "word_ngram"
DENSE = "dense"

ESSAY = "essay"
TRANSCRIPT = "transcript"
IVECTOR = "ivector"

_TEXT_MODALITIES = (ESSAY, TRANSCRIPT)


@dataclass(frozen=True)
class FeatureSpec:
    """One classifier view: a feature kind, its order n, and a modality."""

    kind: str
    n: int
    modality: str

    def __post_init__(self) -> None:
        if self.kind == CHAR_NGRAM:
            if not 1 <= self.n <= 10:
                raise ValueError(f"char n-gram order must be in [1, 10], got {self.n}")
            if self.modality not in _TEXT_MODALITIES:
                raise ValueError(f"char n-grams need a text modality, got {self.modality!r}")
        elif self.kind == WORD_NGRAM:
            if not 1 <= self.n <= 2:
                raise ValueError(f"word n-gram order must be in [1, 2], got {self.n}")
            if self.modality not in _TEXT_MODALITIES:
                raise ValueError(f"word n-grams need a text modality, got {self.modality!r}")
        elif self.kind == DENSE:
            if self.modality != IVECTOR:
                raise ValueError(f"dense views read ivectors, got {self.modality!r}")
        else:
            raise ValueError(f"unknown feature kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == DENSE:
            return "ivector"
        prefix = "char" if self.kind == CHAR_NGRAM else "word"
        return f"{prefix}{self.n}:{self.modality}"

    @staticmethod
    def parse(name: str) -> "FeatureSpec":
        if name == "ivector":
            return FeatureSpec(kind=DENSE, n=0, modality=IVECTOR)
        head, sep, modality = name.partition(":")
        if not sep or not (head.startswith("char") or head.startswith("word")):
            raise ValueError(f"unparseable view name {name!r}")
        kind = CHAR_NGRAM if head.startswith("char") else WORD_NGRAM
        try:
            n = int(head[4:])
        except ValueError as exc:
            raise ValueError(f"unparseable view name {name!r}") from exc
        return FeatureSpec(kind=kind, n=n, modality=modality)


class SparseVector:
    """Sparse vector stored as parallel arrays of strictly increasing indices
    and finite nonzero weights."""

    __slots__ = ("indices", "values")

    def __init__(self, indices: np.ndarray, values: np.ndarray) -> None:
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be 1-D arrays of equal length")
        if indices.size:
            if indices[0] < 0 or np.any(np.diff(indices) <= 0):
                raise ValueError("indices must be nonnegative and strictly increasing")
            if not np.all(np.isfinite(values)):
                raise ValueError("weights must be finite")
            if np.any(values == 0.0):
                raise ValueError("zero weights must not be stored")
        self.indices = indices
        self.values = values

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        pairs = list(pairs)
        idx = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
        val = np.fromiter((p[1] for p in pairs), dtype=np.float64, count=len(pairs))
        return cls(idx, val)

    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(math.sqrt(float(self.values @ self.values)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )

    def __repr__(self) -> str:
        return f"SparseVector({self.entries()!r})"


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between feature strings and the index range [0, V)."""

    feature_of: tuple[str, ...]
    index_of: Mapping[str, int]

    @property
    def size(self) -> int:
        return len(self.feature_of)

    @staticmethod
    def from_features(features: Iterable[str]) -> "Vocabulary":
        ordered = tuple(sorted(set(features)))
        return Vocabulary(feature_of=ordered, index_of={f: i for i, f in enumerate(ordered)})


@dataclass(frozen=True, eq=False)
class TfidfModel:
    """Fitted vocabulary plus document-frequency statistics.

    idf[t] = ln((1 + n_docs) / (1 + df[t])) + 1, which is strictly positive
    and equals 1 exactly when a feature occurs in every document.
    """

    vocab: Vocabulary
    df: np.ndarray
    n_docs: int
    idf: np.ndarray


def normalize(text: str) -> str:
    """Unicode-lowercase, collapse whitespace runs, strip the ends."""
    return " ".join(text.lower().split())


def char_ngrams(text: str, n: int) -> Counter:
    """Count every length-n substring of the space-padded text.

    Counts are over Unicode scalar values; a padded text shorter than n
    yields an empty multiset.
    """
    if n < 1:
        raise ValueError(f"n-gram order must be positive, got {n}")
    padded = f" {text} "
    if len(padded) < n:
        return Counter()
    return Counter(padded[i : i + n] for i in range(len(padded) - n + 1))


def word_ngrams(text: str, n: int) -> Counter:
    """Count space-joined runs of n consecutive whitespace tokens."""
    if n < 1:
        raise ValueError(f"n-gram order must be positive, got {n}")
    tokens = text.split()
    if len(tokens) < n:
        return Counter()
    if n == 1:
        return Counter(tokens)
    return Counter(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def fit_tfidf(docs: Sequence[Mapping[str, int]]) -> TfidfModel:
    """Fit a vocabulary and smoothed idf weights over the given documents."""
    if not docs:
        raise DataError("empty feature space: no documents to fit")
    df_counter: Counter = Counter()
    for doc in docs:
        df_counter.update(doc.keys())
    if not df_counter:
        raise DataError("empty feature space: all documents are empty")
    vocab = Vocabulary.from_features(df_counter.keys())
    df = np.fromiter(
        (df_counter[f] for f in vocab.feature_of), dtype=np.int64, count=vocab.size
    )
    n_docs = len(docs)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return TfidfModel(vocab=vocab, df=df, n_docs=n_docs, idf=idf)


def transform_tfidf(model: TfidfModel, doc: Mapping[str, int]) -> SparseVector:
    """Weight a document's counts by idf and L2-normalize the result.

    Features outside the fitted vocabulary are dropped; a document with no
    in-vocabulary features maps to the empty vector.
    """
    index_of = model.vocab.index_of
    idx_list = []
    cnt_list = []
    for feature, count in doc.items():
        t = index_of.get(feature)
        if t is not None:
            idx_list.append(t)
            cnt_list.append(count)
    if not idx_list:
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    idx = np.asarray(idx_list, dtype=np.int64)
    weights = np.asarray(cnt_list, dtype=np.float64) * model.idf[idx]
    order = np.argsort(idx)
    idx = idx[order]
    weights = weights[order]
    weights /= math.sqrt(float(weights @ weights))
    return SparseVector(idx, weights)


def dense_to_vector(vector: Sequence[float]) -> SparseVector:
    """Wrap a dense real vector as a sparse one, dropping exact zeros."""
    arr = np.asarray(vector, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DataError("non-finite feature in dense vector")
    idx = np.flatnonzero(arr).astype(np.int64)
    return SparseVector(idx, arr[idx])
