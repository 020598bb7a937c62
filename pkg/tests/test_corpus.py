from __future__ import annotations

from collections import Counter
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlid.corpus import Corpus, Instance, load_corpus, split, stratified_folds
from nlid.errors import DataError

from synth_corpus import broad_corpus, write_corpus_files


def _write(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def small_files(tmp_path):
    essays = _write(tmp_path / "essays.tsv",
                    ["id\tpayload", "a\tthe essay a", "b\tessay b", "c\tessay c"])
    transcripts = _write(tmp_path / "transcripts.tsv",
                         ["id\tpayload", "a\tt a", "b\tt b", "c\tt c"])
    ivectors = _write(tmp_path / "ivectors.tsv",
                      ["id\tpayload", "a\t1.0,2.0", "b\t0.0,1.5", "c\t3.0,0.0"])
    labels = _write(tmp_path / "labels.tsv",
                    ["id\tlabel", "a\tFRE", "b\tGER", "c\tFRE"])
    return essays, transcripts, ivectors, labels


class TestLoadCorpus:
    def test_well_formed(self, small_files):
        essays, transcripts, ivectors, labels = small_files
        corpus = load_corpus(essays, transcripts, ivectors, labels)
        assert len(corpus) == 3
        assert corpus.labels == ("FRE", "GER")
        assert corpus.ivector_dim == 2
        assert [inst.id for inst in corpus] == ["a", "b", "c"]

    def test_optional_ivectors(self, small_files):
        essays, transcripts, _, labels = small_files
        corpus = load_corpus(essays, transcripts, None, labels)
        assert corpus.ivector_dim is None
        assert corpus.instances[0].ivector is None

    def test_missing_id_in_transcripts(self, tmp_path, small_files):
        essays, _, ivectors, labels = small_files
        transcripts = _write(tmp_path / "tr2.tsv", ["id\tpayload", "a\tt a", "b\tt b"])
        with pytest.raises(DataError, match="view mismatch: id 'c' missing from transcripts"):
            load_corpus(essays, transcripts, ivectors, labels)

    def test_extra_id_in_essays(self, tmp_path, small_files):
        _, transcripts, ivectors, labels = small_files
        essays = _write(tmp_path / "es2.tsv",
                        ["id\tpayload", "a\te", "b\te", "c\te", "d\te"])
        with pytest.raises(DataError, match="view mismatch: id 'd' missing from labels"):
            load_corpus(essays, transcripts, ivectors, labels)

    def test_ragged_ivectors(self, tmp_path, small_files):
        essays, transcripts, _, labels = small_files
        ivectors = _write(tmp_path / "iv2.tsv",
                          ["id\tpayload", "a\t1,2,3,4,5", "b\t1,2,3,4,5,6", "c\t1,2,3,4,5"])
        with pytest.raises(DataError, match="dimension mismatch"):
            load_corpus(essays, transcripts, ivectors, labels)

    def test_empty_labels(self, tmp_path, small_files):
        essays, transcripts, ivectors, _ = small_files
        labels = _write(tmp_path / "lb2.tsv", ["id\tlabel"])
        with pytest.raises(DataError, match="empty corpus"):
            load_corpus(essays, transcripts, ivectors, labels)

    def test_duplicate_id(self, tmp_path, small_files):
        essays, transcripts, ivectors, _ = small_files
        labels = _write(tmp_path / "lb3.tsv",
                        ["id\tlabel", "a\tFRE", "a\tGER", "b\tGER", "c\tFRE"])
        with pytest.raises(DataError, match="duplicate id 'a'"):
            load_corpus(essays, transcripts, ivectors, labels)

    def test_bad_header(self, tmp_path, small_files):
        _, transcripts, ivectors, labels = small_files
        essays = _write(tmp_path / "es3.tsv", ["essay\tid", "a\te", "b\te", "c\te"])
        with pytest.raises(DataError, match="bad header"):
            load_corpus(essays, transcripts, ivectors, labels)

    def test_crlf_and_missing_trailing_newline(self, tmp_path, small_files):
        _, transcripts, ivectors, labels = small_files
        essays = tmp_path / "es4.tsv"
        essays.write_bytes(b"id\tpayload\r\na\te a\r\nb\te b\r\nc\te c")
        corpus = load_corpus(essays, transcripts, ivectors, labels)
        assert corpus.instances[2].essay == "e c"

    def test_load_idempotent(self, small_files):
        essays, transcripts, ivectors, labels = small_files
        first = load_corpus(essays, transcripts, ivectors, labels)
        second = load_corpus(essays, transcripts, ivectors, labels)
        assert first == second


class TestStratifiedFolds:
    def test_balanced_divisible(self):
        corpus = broad_corpus(n_per_class=10, seed=3, with_ivectors=False)
        folds = stratified_folds(corpus, k=5, seed=0)
        per_class_fold = Counter((inst.label, folds.fold_of[inst.id]) for inst in corpus)
        assert set(per_class_fold.values()) == {2}

    def test_deterministic(self):
        corpus = broad_corpus(n_per_class=7, seed=3, with_ivectors=False)
        first = stratified_folds(corpus, k=3, seed=42)
        second = stratified_folds(corpus, k=3, seed=42)
        assert first.fold_of == second.fold_of

    def test_insufficient_support(self):
        corpus = broad_corpus(n_per_class=3, seed=3, with_ivectors=False)
        with pytest.raises(DataError, match="insufficient class support"):
            stratified_folds(corpus, k=5, seed=0)

    def test_rejects_k_below_two(self):
        corpus = broad_corpus(n_per_class=4, seed=3, with_ivectors=False)
        with pytest.raises(DataError, match="at least 2"):
            stratified_folds(corpus, k=1, seed=0)

    @given(n_per_class=st.integers(min_value=5, max_value=13),
           k=st.integers(min_value=2, max_value=5),
           seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_stratification_property(self, n_per_class, k, seed):
        corpus = broad_corpus(n_per_class=n_per_class, seed=1, with_ivectors=False)
        folds = stratified_folds(corpus, k=k, seed=seed)
        sizes = Counter((inst.label, folds.fold_of[inst.id]) for inst in corpus)
        for label in corpus.labels:
            per_fold = [sizes.get((label, f), 0) for f in range(k)]
            assert max(per_fold) - min(per_fold) <= 1
            assert sum(per_fold) == n_per_class


class TestSplit:
    def test_balanced_sizes(self):
        corpus = broad_corpus(n_per_class=10, seed=3, with_ivectors=False)
        folds = stratified_folds(corpus, k=5, seed=0)
        train, dev = split(corpus, folds, held_out=0)
        assert len(train) == 88
        assert len(dev) == 22

    def test_out_of_range(self):
        corpus = broad_corpus(n_per_class=10, seed=3, with_ivectors=False)
        folds = stratified_folds(corpus, k=5, seed=0)
        with pytest.raises(DataError, match="out of range"):
            split(corpus, folds, held_out=5)

    def test_partition_property(self):
        corpus = broad_corpus(n_per_class=6, seed=3, with_ivectors=False)
        folds = stratified_folds(corpus, k=3, seed=9)
        dev_ids: list[str] = []
        for f in range(3):
            train, dev = split(corpus, folds, held_out=f)
            train_ids = {inst.id for inst in train}
            fold_ids = {inst.id for inst in dev}
            assert train_ids.isdisjoint(fold_ids)
            assert train_ids | fold_ids == {inst.id for inst in corpus}
            dev_ids.extend(sorted(fold_ids))
        assert sorted(dev_ids) == sorted(inst.id for inst in corpus)

    def test_preserves_order(self):
        corpus = broad_corpus(n_per_class=6, seed=3, with_ivectors=False)
        folds = stratified_folds(corpus, k=2, seed=1)
        train, dev = split(corpus, folds, held_out=1)
        order = {inst.id: i for i, inst in enumerate(corpus)}
        for half in (train, dev):
            positions = [order[inst.id] for inst in half]
            assert positions == sorted(positions)


class TestCorpusValidation:
    def test_mixed_ivector_presence_rejected(self):
        with_vec = Instance(id="a", essay="x", transcript="x", ivector=(1.0,), label="L1")
        without = Instance(id="b", essay="y", transcript="y", ivector=None, label="L2")
        with pytest.raises(DataError, match="view mismatch"):
            Corpus.from_instances([with_vec, without])

    def test_roundtrip_through_files(self, tmp_path):
        corpus = broad_corpus(n_per_class=4, seed=5)
        paths = write_corpus_files(corpus, tmp_path)
        loaded = load_corpus(
            paths["essays"], paths["transcripts"], paths["ivectors"], paths["labels"]
        )
        assert loaded == corpus
