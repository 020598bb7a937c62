from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlid.errors import DataError
from nlid.features import (
    FeatureSpec,
    SparseVector,
    char_ngrams,
    dense_to_vector,
    fit_tfidf,
    normalize,
    transform_tfidf,
    word_ngrams,
)


class TestNormalize:
    def test_lowercases(self):
        assert normalize("I Think") == "i think"

    def test_collapses_whitespace(self):
        assert normalize("  A\tB ") == "a b"

    def test_dotted_capital_i_uses_default_mapping(self):
        assert normalize("İ") == "İ".lower()

    def test_empty(self):
        assert normalize("   ") == ""


class TestCharNgrams:
    def test_two_grams_of_ab(self):
        assert char_ngrams("ab", 2) == Counter({" a": 1, "ab": 1, "b ": 1})

    def test_repeats_counted(self):
        assert char_ngrams("aaa", 2) == Counter({" a": 1, "aa": 2, "a ": 1})

    def test_word_boundary_eight_gram(self):
        grams = char_ngrams(normalize("well I think so"), 8)
        assert grams["i think "] == 1

    def test_shorter_than_n_is_empty(self):
        assert char_ngrams("ab", 5) == Counter()

    def test_total_count_formula(self):
        text = "some words here"
        for n in range(1, 12):
            total = sum(char_ngrams(text, n).values())
            assert total == max(0, (len(text) + 2) - n + 1)

    def test_rejects_nonpositive_n(self):
        with pytest.raises(ValueError):
            char_ngrams("ab", 0)


class TestWordNgrams:
    def test_bigrams(self):
        assert word_ngrams("i think so", 2) == Counter({"i think": 1, "think so": 1})

    def test_unigrams(self):
        assert word_ngrams("i think so", 1) == Counter({"i": 1, "think": 1, "so": 1})

    def test_empty_text(self):
        assert word_ngrams("", 1) == Counter()
        assert word_ngrams("", 2) == Counter()

    def test_total_count_formula(self):
        text = "a b c d e"
        for n in (1, 2, 3):
            total = sum(word_ngrams(text, n).values())
            assert total == max(0, 5 - n + 1)


class TestSparseVector:
    def test_entries_roundtrip(self):
        vec = SparseVector.from_pairs([(0, 1.5), (4, -2.0)])
        assert vec.entries() == [(0, 1.5), (4, -2.0)]

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SparseVector.from_pairs([(3, 1.0), (1, 1.0)])

    def test_rejects_zero_weight(self):
        with pytest.raises(ValueError):
            SparseVector.from_pairs([(0, 0.0)])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SparseVector.from_pairs([(0, float("inf"))])


class TestFitTfidf:
    def test_single_doc_idf_is_one(self):
        model = fit_tfidf([{"a": 2}])
        assert model.vocab.size == 1
        assert model.df.tolist() == [1]
        assert model.idf.tolist() == [math.log(2 / 2) + 1]

    def test_feature_in_both_docs(self):
        model = fit_tfidf([{"a": 1}, {"a": 3}])
        assert model.idf.tolist() == [math.log(3 / 3) + 1]

    def test_feature_in_one_of_two_docs(self):
        model = fit_tfidf([{"a": 1, "b": 1}, {"a": 1}])
        b = model.vocab.index_of["b"]
        assert model.idf[b] == pytest.approx(math.log(3 / 2) + 1, abs=1e-12)

    def test_vocabulary_sorted(self):
        model = fit_tfidf([{"zz": 1, "aa": 1, "mm": 1}])
        assert model.vocab.feature_of == ("aa", "mm", "zz")

    def test_all_docs_empty(self):
        with pytest.raises(DataError, match="empty feature space"):
            fit_tfidf([{}, {}])

    def test_no_docs(self):
        with pytest.raises(DataError, match="empty feature space"):
            fit_tfidf([])

    def test_fit_order_invariant(self):
        docs = [{"a": 1, "b": 2}, {"b": 1}, {"c": 4}]
        m1 = fit_tfidf(docs)
        m2 = fit_tfidf(docs[::-1])
        assert m1.vocab.feature_of == m2.vocab.feature_of
        assert np.array_equal(m1.idf, m2.idf)
        assert np.array_equal(m1.df, m2.df)


class TestTransformTfidf:
    def test_singleton_doc_normalizes_to_one(self):
        model = fit_tfidf([{"a": 1}, {"b": 1}])
        vec = transform_tfidf(model, {"a": 5})
        assert vec.entries() == [(model.vocab.index_of["a"], 1.0)]

    def test_unseen_features_dropped(self):
        model = fit_tfidf([{"a": 1}])
        assert transform_tfidf(model, {"zzz": 3}).entries() == []

    def test_equal_idf_pair(self):
        model = fit_tfidf([{"a": 1, "b": 1}])
        vec = transform_tfidf(model, {"a": 1, "b": 1})
        weights = [w for _, w in vec.entries()]
        assert weights == pytest.approx([1 / math.sqrt(2)] * 2, abs=1e-12)

    @given(
        st.dictionaries(
            st.text(alphabet="abcdef", min_size=1, max_size=3),
            st.integers(min_value=1, max_value=9),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_unit_norm_property(self, doc):
        model = fit_tfidf([doc, {"pad": 1}])
        vec = transform_tfidf(model, doc)
        assert vec.norm() == pytest.approx(1.0, abs=1e-12)

    @given(
        st.dictionaries(
            st.text(alphabet="abc", min_size=1, max_size=2),
            st.integers(min_value=1, max_value=9),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_doubling_counts_is_invariant(self, doc):
        model = fit_tfidf([doc, {"x": 1}])
        doubled = {k: 2 * v for k, v in doc.items()}
        assert transform_tfidf(model, doc) == transform_tfidf(model, doubled)


class TestDenseToVector:
    def test_drops_zeros(self):
        assert dense_to_vector([0.0, 2.5, 0.0]).entries() == [(1, 2.5)]

    def test_all_zero(self):
        assert dense_to_vector([0.0, 0.0]).entries() == []

    def test_rejects_nan(self):
        with pytest.raises(DataError, match="non-finite"):
            dense_to_vector([1.0, float("nan")])


class TestFeatureSpec:
    def test_names_roundtrip(self):
        for name in ("char6:essay", "word2:transcript", "ivector"):
            assert FeatureSpec.parse(name).name == name

    def test_char_order_bounds(self):
        with pytest.raises(ValueError):
            FeatureSpec(kind="char_ngram", n=11, modality="essay")

    def test_word_order_bounds(self):
        with pytest.raises(ValueError):
            FeatureSpec(kind="word_ngram", n=3, modality="essay")

    def test_dense_modality(self):
        with pytest.raises(ValueError):
            FeatureSpec(kind="dense", n=0, modality="essay")
