from __future__ import annotations

import numpy as np
import pytest

from nlid.corpus import stratified_folds
from nlid.ensemble import ClassifierView, train_view
from nlid.errors import DataError
from nlid.features import FeatureSpec
from nlid.metrics import confusion, score
from nlid.report import (
    ranking_tsv_lines,
    render_confusion,
    render_eval_report,
    report_kv_lines,
    top_features,
)
from nlid.svm import LinearModel

from reference_data import REFERENCE_LABELS, reference_streams
from synth_corpus import BROAD_MARKERS, broad_corpus


@pytest.fixture(scope="module")
def marker_view():
    corpus = broad_corpus(n_per_class=8, seed=31)
    folds = stratified_folds(corpus, k=4, seed=0)
    return train_view(corpus, FeatureSpec.parse("char5:essay"), folds, (0.1, 1.0))


class TestTopFeatures:
    def test_planted_markers_rank_high(self, marker_view):
        for lang, marker in BROAD_MARKERS.items():
            ranking = top_features(marker_view, lang, 10)
            assert ranking.label == lang
            assert any(marker[2] in feature for feature, _ in ranking.entries), (
                f"no marker-derived feature in top 10 for {lang}"
            )

    def test_weights_descending_and_exact(self, marker_view):
        ranking = top_features(marker_view, "ARA", 25)
        weights = [w for _, w in ranking.entries]
        assert weights == sorted(weights, reverse=True)
        assert all(w > 0 for w in weights)
        row = marker_view.model.weights[marker_view.model.classes.index("ARA")]
        vocab = marker_view.tfidf.vocab
        for feature, weight in ranking.entries:
            assert row[vocab.index_of[feature]] == weight

    def test_k_zero(self, marker_view):
        assert top_features(marker_view, "ARA", 0).entries == ()

    def test_k_larger_than_vocab_returns_all_positive(self, marker_view):
        vocab_size = marker_view.tfidf.vocab.size
        ranking = top_features(marker_view, "ARA", vocab_size + 10)
        assert len(ranking.entries) <= vocab_size

    def test_scaling_weights_preserves_ranking(self, marker_view):
        scaled_model = LinearModel(
            classes=marker_view.model.classes,
            weights=marker_view.model.weights * 7.0,
            C=marker_view.model.C,
            tol=marker_view.model.tol,
            max_iter=marker_view.model.max_iter,
        )
        scaled_view = ClassifierView(
            spec=marker_view.spec,
            tfidf=marker_view.tfidf,
            model=scaled_model,
            cv_accuracy=marker_view.cv_accuracy,
            best_C=marker_view.best_C,
        )
        base = [f for f, _ in top_features(marker_view, "CHI", 10).entries]
        scaled = [f for f, _ in top_features(scaled_view, "CHI", 10).entries]
        assert base == scaled

    def test_dense_view_has_no_vocabulary(self):
        model = LinearModel(
            classes=("A", "B"), weights=np.zeros((2, 3)), C=1.0, tol=1e-3, max_iter=1
        )
        view = ClassifierView(
            spec=FeatureSpec.parse("ivector"), tfidf=None, model=model,
            cv_accuracy=0.5, best_C=1.0,
        )
        with pytest.raises(DataError, match="no vocabulary"):
            top_features(view, "A", 5)

    def test_unknown_label(self, marker_view):
        with pytest.raises(DataError, match="unknown label"):
            top_features(marker_view, "XXX", 5)

    def test_tsv_lines(self, marker_view):
        rankings = [top_features(marker_view, lang, 3) for lang in ("ARA", "CHI")]
        lines = ranking_tsv_lines(rankings)
        assert lines[0] == "label\trank\tfeature\tweight"
        assert len(lines) == 1 + 6
        first = lines[1].split("\t")
        assert first[0] == "ARA" and first[1] == "1"


class TestRenderConfusion:
    def test_two_by_two(self):
        matrix = confusion(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
        text = render_confusion(matrix)
        lines = text.splitlines()
        assert "A" in lines[0] and "B" in lines[0]
        assert lines[1].startswith("A")
        assert lines[2].startswith("B")

    def test_roundtrip_parse(self):
        gold, pred = reference_streams()
        matrix = confusion(gold, pred, REFERENCE_LABELS)
        lines = render_confusion(matrix).splitlines()
        header = lines[0].split()
        assert tuple(header) == REFERENCE_LABELS
        for i, line in enumerate(lines[1:]):
            cells = line.split()
            assert cells[0] == REFERENCE_LABELS[i]
            parsed = [int(c) for c in cells[1:]]
            assert parsed == matrix.counts[i].tolist()

    def test_eleven_labels_renders_twelve_columns(self):
        gold, pred = reference_streams()
        matrix = confusion(gold, pred, REFERENCE_LABELS)
        for line in render_confusion(matrix).splitlines()[1:]:
            assert len(line.split()) == 12


class TestEvalRendering:
    def test_report_kv_lines_cover_everything(self):
        matrix = confusion(["A", "B", "A"], ["A", "B", "B"], ["A", "B"])
        report = score(matrix)
        kv = dict(line.split("\t") for line in report_kv_lines(report, matrix))
        assert kv["n"] == "3"
        assert float(kv["accuracy"]) == pytest.approx(2 / 3)
        assert float(kv["confusion.A.B"]) == 1
        assert set(k.split(".")[0] for k in kv) == {
            "n", "accuracy", "macro_f1", "precision", "recall", "f1", "confusion",
        }

    def test_human_report_mentions_metrics(self):
        matrix = confusion(["A", "B"], ["A", "B"], ["A", "B"])
        text = render_eval_report(score(matrix), matrix)
        assert "accuracy" in text and "macro F1" in text
        assert "1.0000" in text
