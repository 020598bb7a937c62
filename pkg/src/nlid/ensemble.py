"""Per-view classifier training, CV-thresholded selection, majority fusion.

A view is one (feature kind, n, modality) combination. Each candidate view is
tuned by k-fold cross-validation over a grid of C values, with TF-IDF refit
on every fold's training portion so no held-out statistics leak into the
vocabulary. Views whose cross-validated accuracy clears the selection
threshold are fused by plurality vote over their predicted labels.
"""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, FoldAssignment, Instance
from .errors import DataError
from .features import (
    CHAR_NGRAM,
    DENSE,
    ESSAY,
    IVECTOR,
    TRANSCRIPT,
    WORD_NGRAM,
    FeatureSpec,
    SparseVector,
    TfidfModel,
    char_ngrams,
    dense_to_vector,
    fit_tfidf,
    normalize,
    transform_tfidf,
    word_ngrams,
)
from .svm import (
    DEFAULT_C_GRID,
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_TOL,
    LinearModel,
    cv_accuracy_matrix,
    grid_search_C,
    predict,
    select_best_c,
    train_ovr,
)

DEFAULT_THRESHOLD = 0.8
TIE_POLICY = "margin-sum-then-lexicographic"


@dataclass(frozen=True, eq=False)
class ClassifierView:
    """A fitted view: feature spec, TF-IDF stats (n-gram views only), model,
    and the cross-validated accuracy that drove its selection."""

    spec: FeatureSpec
    tfidf: TfidfModel | None
    model: LinearModel
    cv_accuracy: float
    best_C: float

    def __post_init__(self) -> None:
        if (self.tfidf is None) != (self.spec.kind == DENSE):
            raise DataError(
                f"view '{self.spec.name}' must carry TF-IDF statistics exactly "
                "when it is an n-gram view"
            )

    @property
    def name(self) -> str:
        return self.spec.name


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    views: tuple[ClassifierView, ...]
    labels: tuple[str, ...]
    selection_threshold: float
    tie_policy: str = TIE_POLICY


@dataclass(frozen=True)
class FusedPrediction:
    label: str
    view_labels: tuple[str, ...]
    votes: Mapping[str, int]


def default_specs(with_ivectors: bool = False) -> list[FeatureSpec]:
    """The full experiment space: char 1-10 and word 1-2 n-grams on both text
    modalities, plus the dense acoustic view when requested."""
    specs = [
        FeatureSpec(kind=CHAR_NGRAM, n=n, modality=mod)
        for mod in (ESSAY, TRANSCRIPT)
        for n in range(1, 11)
    ]
    specs += [
        FeatureSpec(kind=WORD_NGRAM, n=n, modality=mod)
        for mod in (ESSAY, TRANSCRIPT)
        for n in (1, 2)
    ]
    if with_ivectors:
        specs.append(FeatureSpec(kind=DENSE, n=0, modality=IVECTOR))
    return specs


def view_counts(spec: FeatureSpec, instance: Instance) -> Counter:
    """Extract the n-gram multiset a text view reads from one instance."""
    if spec.kind == DENSE:
        raise DataError("dense views carry vectors, not n-gram counts")
    text = normalize(instance.essay if spec.modality == ESSAY else instance.transcript)
    if spec.kind == CHAR_NGRAM:
        return char_ngrams(text, spec.n)
    return word_ngrams(text, spec.n)


def view_vector(view: ClassifierView, instance: Instance) -> SparseVector:
    """Vectorize one instance for a fitted view."""
    if view.spec.kind == DENSE:
        if instance.ivector is None:
            raise DataError(f"missing view: instance '{instance.id}' has no ivector")
        return dense_to_vector(instance.ivector)
    assert view.tfidf is not None
    return transform_tfidf(view.tfidf, view_counts(view.spec, instance))


def _dense_vectors(corpus: Corpus) -> list[SparseVector]:
    if corpus.ivector_dim is None:
        raise DataError("missing view: corpus has no ivectors")
    return [dense_to_vector(inst.ivector) for inst in corpus]


def ngram_fold_datasets(docs, y, fold_index, k):
    """Per-fold (tfidf, (x_train, y_train, x_dev, y_dev)) with TF-IDF fitted
    on that fold's training portion only, so held-out documents never
    influence the vocabulary or document frequencies."""
    fold_arr = np.asarray(fold_index, dtype=np.int64)
    out = []
    for f in range(k):
        train_idx = np.flatnonzero(fold_arr != f)
        dev_idx = np.flatnonzero(fold_arr == f)
        if train_idx.size == 0 or dev_idx.size == 0:
            raise DataError("fold with no train or no dev instances")
        tfidf = fit_tfidf([docs[i] for i in train_idx])
        dataset = (
            [transform_tfidf(tfidf, docs[i]) for i in train_idx],
            [y[i] for i in train_idx],
            [transform_tfidf(tfidf, docs[i]) for i in dev_idx],
            [y[i] for i in dev_idx],
        )
        out.append((tfidf, dataset))
    return out


def train_view(
    corpus: Corpus,
    spec: FeatureSpec,
    folds: FoldAssignment,
    grid: Sequence[float] = DEFAULT_C_GRID,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
    refit_corpus: Corpus | None = None,
) -> ClassifierView:
    """Tune and fit one view.

    Cross-validation refits TF-IDF on each fold's training portion before
    transforming either side, picks the best C (ties toward smaller), and
    reports the mean held-out accuracy at that C. The returned model and
    TF-IDF statistics are then fitted on ``refit_corpus`` (defaults to the
    training corpus itself) at the chosen C.
    """
    if len(corpus.labels) < 2:
        raise DataError("degenerate problem: training corpus has a single class")
    if not grid:
        raise DataError("empty C grid")
    final_corpus = refit_corpus if refit_corpus is not None else corpus
    y = [inst.label for inst in corpus]
    classes = corpus.labels
    fold_index = [folds.fold_of[inst.id] for inst in corpus]

    if spec.kind == DENSE:
        vectors = _dense_vectors(corpus)
        cv = grid_search_C(
            vectors, y, classes, fold_index, grid, tol=tol, max_iter=max_iter, seed=seed
        )
        best_c = cv.best_C
        cv_accuracy = cv.mean_accuracy[cv.grid.index(best_c)]
        final_vectors = _dense_vectors(final_corpus)
        model = train_ovr(
            final_vectors,
            [inst.label for inst in final_corpus],
            classes,
            best_c,
            tol=tol,
            max_iter=max_iter,
            seed=seed,
        )
        return ClassifierView(
            spec=spec, tfidf=None, model=model, cv_accuracy=cv_accuracy, best_C=best_c
        )

    docs = [view_counts(spec, inst) for inst in corpus]
    datasets = [
        dataset for _, dataset in ngram_fold_datasets(docs, y, fold_index, folds.k)
    ]
    acc = cv_accuracy_matrix(datasets, classes, grid, tol=tol, max_iter=max_iter, seed=seed)
    means = [float(v) for v in acc.mean(axis=1)]
    best_c = select_best_c(grid, means)
    cv_accuracy = means[list(grid).index(best_c)]

    if final_corpus is corpus:
        final_docs = docs
    else:
        final_docs = [view_counts(spec, inst) for inst in final_corpus]
    tfidf = fit_tfidf(final_docs)
    final_x = [transform_tfidf(tfidf, doc) for doc in final_docs]
    model = train_ovr(
        final_x,
        [inst.label for inst in final_corpus],
        classes,
        best_c,
        tol=tol,
        max_iter=max_iter,
        seed=seed,
    )
    return ClassifierView(
        spec=spec, tfidf=tfidf, model=model, cv_accuracy=cv_accuracy, best_C=best_c
    )


def select_views(
    views: Sequence[ClassifierView], threshold: float = DEFAULT_THRESHOLD
) -> list[ClassifierView]:
    """Keep n-gram views strictly above the threshold; dense views always stay.

    Input order is preserved. An empty selection is an error.
    """
    kept = [
        v for v in views if v.spec.kind == DENSE or v.cv_accuracy > threshold
    ]
    if not kept:
        raise DataError(f"no views selected: no view exceeded threshold {threshold}")
    return kept


def _train_view_job(args) -> ClassifierView:
    corpus, spec, folds, grid, tol, max_iter, seed, refit_corpus = args
    return train_view(
        corpus,
        spec,
        folds,
        grid,
        tol=tol,
        max_iter=max_iter,
        seed=seed,
        refit_corpus=refit_corpus,
    )


def _expected_cost_rank(spec: FeatureSpec) -> int:
    # Low-dimensional views converge slowest at large C; schedule them first
    # so parallel workers do not idle behind a long tail.
    if spec.kind == DENSE:
        return 0
    if spec.kind == WORD_NGRAM:
        return spec.n + 1
    return spec.n


def build_ensemble(
    corpus: Corpus,
    specs: Sequence[FeatureSpec],
    with_ivectors: bool = False,
    folds: FoldAssignment | None = None,
    grid: Sequence[float] = DEFAULT_C_GRID,
    threshold: float = DEFAULT_THRESHOLD,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    refit_corpus: Corpus | None = None,
    on_view: Callable[[ClassifierView, bool], None] | None = None,
) -> EnsembleModel:
    """Train every candidate view, filter by CV accuracy, and assemble.

    ``specs`` lists the n-gram candidates; ``with_ivectors`` appends the dense
    acoustic view, which bypasses the threshold filter. ``on_view`` is called
    once per candidate with its kept/dropped status, in spec order, for
    logging. ``jobs`` > 1 trains candidate views in parallel processes; the
    result is identical to a sequential run.
    """
    if not specs:
        raise DataError("no candidate views given")
    if folds is None:
        raise DataError("fold assignment required")
    all_specs = list(specs)
    if with_ivectors:
        all_specs.append(FeatureSpec(kind=DENSE, n=0, modality=IVECTOR))
    job_args = [
        (corpus, spec, folds, tuple(grid), tol, max_iter, seed, refit_corpus)
        for spec in all_specs
    ]

    def is_kept(view: ClassifierView) -> bool:
        return view.spec.kind == DENSE or view.cv_accuracy > threshold

    trained: list[ClassifierView] = []
    if jobs > 1:
        order = sorted(
            range(len(all_specs)), key=lambda i: _expected_cost_rank(all_specs[i])
        )
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {i: pool.submit(_train_view_job, job_args[i]) for i in order}
            trained = [futures[i].result() for i in range(len(all_specs))]
        if on_view is not None:
            for view in trained:
                on_view(view, is_kept(view))
    else:
        for args in job_args:
            view = _train_view_job(args)
            trained.append(view)
            if on_view is not None:
                on_view(view, is_kept(view))

    kept = [view for view in trained if is_kept(view)]
    if not kept:
        raise DataError(f"no views selected: no view exceeded threshold {threshold}")
    return EnsembleModel(
        views=tuple(kept),
        labels=corpus.labels,
        selection_threshold=threshold,
    )


def fuse_votes(
    view_labels: Sequence[str],
    view_margins: Sequence[np.ndarray],
    labels: Sequence[str],
) -> tuple[str, Mapping[str, int]]:
    """Plurality vote over per-view labels.

    Vote ties are broken by the largest sum of per-view decision margins for
    the tied label; any remaining tie goes to the lexicographically first
    label. The outcome does not depend on view order.
    """
    votes = Counter(view_labels)
    top = max(votes.values())
    tied = sorted(lbl for lbl, count in votes.items() if count == top)
    if len(tied) > 1:
        index = {lbl: i for i, lbl in enumerate(labels)}
        sums = {
            lbl: sum(float(m[index[lbl]]) for m in view_margins) for lbl in tied
        }
        best = max(sums.values())
        tied = sorted(lbl for lbl in tied if sums[lbl] == best)
    return tied[0], dict(votes)


def fuse_predict(ensemble: EnsembleModel, instance: Instance) -> FusedPrediction:
    """Predict one instance with every view and fuse by majority vote."""
    view_labels = []
    view_margins = []
    for view in ensemble.views:
        label, margins = predict(view.model, view_vector(view, instance))
        view_labels.append(label)
        view_margins.append(margins)
    label, votes = fuse_votes(view_labels, view_margins, ensemble.labels)
    return FusedPrediction(label=label, view_labels=tuple(view_labels), votes=votes)


def predict_corpus(ensemble: EnsembleModel, corpus: Corpus) -> list[FusedPrediction]:
    """Fused predictions for every instance, in corpus order."""
    return [fuse_predict(ensemble, inst) for inst in corpus]
