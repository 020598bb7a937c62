"""Single-file ensemble persistence.

Layout: a magic line carrying the format version, the JSON header length in
bytes, the JSON header itself, then one raw little-endian binary blob holding
every view's weight matrix (float64) and document-frequency array (int64) at
offsets recorded in the header. Serialization is deterministic: the same
model always produces the same bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ensemble import ClassifierView, EnsembleModel
from .errors import ModelError
from .features import FeatureSpec, TfidfModel, Vocabulary
from .ioutil import atomic_write_bytes
from .svm import LinearModel

MAGIC = "NLID-ENSEMBLE"
FORMAT_VERSION = 1


def _view_header(view: ClassifierView, blob: bytearray) -> dict:
    weights = np.ascontiguousarray(view.model.weights, dtype=np.float64)
    weights_offset = len(blob)
    blob.extend(weights.astype("<f8").tobytes())
    header: dict = {
        "spec": {"kind": view.spec.kind, "n": view.spec.n, "modality": view.spec.modality},
        "cv_accuracy": view.cv_accuracy,
        "best_C": view.best_C,
        "model": {
            "classes": list(view.model.classes),
            "C": view.model.C,
            "tol": view.model.tol,
            "max_iter": view.model.max_iter,
            "weights_offset": weights_offset,
            "weights_shape": list(weights.shape),
        },
        "tfidf": None,
    }
    if view.tfidf is not None:
        df = np.ascontiguousarray(view.tfidf.df, dtype=np.int64)
        df_offset = len(blob)
        blob.extend(df.astype("<i8").tobytes())
        header["tfidf"] = {
            "n_docs": view.tfidf.n_docs,
            "features": list(view.tfidf.vocab.feature_of),
            "df_offset": df_offset,
        }
    return header


def save_ensemble(model: EnsembleModel, path: str | Path) -> None:
    """Serialize the ensemble to ``path`` atomically."""
    blob = bytearray()
    header = {
        "labels": list(model.labels),
        "selection_threshold": model.selection_threshold,
        "tie_policy": model.tie_policy,
        "views": [_view_header(view, blob) for view in model.views],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(
        [
            f"{MAGIC} {FORMAT_VERSION}\n".encode("ascii"),
            f"{len(header_bytes)}\n".encode("ascii"),
            header_bytes,
            b"\n",
            bytes(blob),
        ]
    )
    atomic_write_bytes(path, payload)


def _read_exact(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ModelError(f"truncated model file: short read in {what}")
    return data


def load_ensemble(path: str | Path) -> EnsembleModel:
    """Read a model file back; rejects wrong magic or format versions."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic_line = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        parts = magic_line.split(" ")
        if len(parts) != 2 or parts[0] != MAGIC:
            raise ModelError(f"not a recognized model file: bad magic in {path}")
        try:
            version = int(parts[1])
        except ValueError:
            raise ModelError(f"not a recognized model file: bad magic in {path}") from None
        if version != FORMAT_VERSION:
            raise ModelError(
                f"unsupported model format version {version}; this build reads "
                f"version {FORMAT_VERSION}"
            )
        try:
            header_len = int(fh.readline().decode("ascii").strip())
        except ValueError:
            raise ModelError(f"corrupt model header length in {path}") from None
        try:
            header = json.loads(_read_exact(fh, header_len, "header"))
        except json.JSONDecodeError as exc:
            raise ModelError(f"corrupt model header in {path}: {exc}") from exc
        _read_exact(fh, 1, "header terminator")
        blob = fh.read()

    views = []
    for vh in header["views"]:
        spec = FeatureSpec(
            kind=vh["spec"]["kind"], n=vh["spec"]["n"], modality=vh["spec"]["modality"]
        )
        mh = vh["model"]
        rows, cols = mh["weights_shape"]
        start = mh["weights_offset"]
        end = start + rows * cols * 8
        if end > len(blob):
            raise ModelError(f"truncated model file: weight block out of range in {path}")
        weights = np.frombuffer(blob[start:end], dtype="<f8").reshape(rows, cols).copy()
        model = LinearModel(
            classes=tuple(mh["classes"]),
            weights=weights,
            C=mh["C"],
            tol=mh["tol"],
            max_iter=mh["max_iter"],
        )
        tfidf = None
        if vh["tfidf"] is not None:
            th = vh["tfidf"]
            features = tuple(th["features"])
            start = th["df_offset"]
            end = start + len(features) * 8
            if end > len(blob):
                raise ModelError(f"truncated model file: df block out of range in {path}")
            df = np.frombuffer(blob[start:end], dtype="<i8").copy()
            n_docs = th["n_docs"]
            idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
            vocab = Vocabulary(
                feature_of=features, index_of={f: i for i, f in enumerate(features)}
            )
            tfidf = TfidfModel(vocab=vocab, df=df, n_docs=n_docs, idf=idf)
        views.append(
            ClassifierView(
                spec=spec,
                tfidf=tfidf,
                model=model,
                cv_accuracy=vh["cv_accuracy"],
                best_C=vh["best_C"],
            )
        )
    return EnsembleModel(
        views=tuple(views),
        labels=tuple(header["labels"]),
        selection_threshold=header["selection_threshold"],
        tie_policy=header["tie_policy"],
    )
