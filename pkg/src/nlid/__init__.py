"""Native language identification with majority-vote SVM ensembles.

The pipeline: load a multi-view corpus (essays, transcripts, optional dense
acoustic vectors), extract lowercased character/word n-grams with TF-IDF
weighting, train one linear SVM per view by dual coordinate descent with a
cross-validated C search, keep the views whose CV accuracy clears a
threshold, and fuse their predictions by plurality vote.
"""
from .corpus import Corpus, FoldAssignment, Instance, load_corpus, split, stratified_folds
from .ensemble import (
    ClassifierView,
    EnsembleModel,
    FusedPrediction,
    build_ensemble,
    default_specs,
    fuse_predict,
    fuse_votes,
    predict_corpus,
    select_views,
    train_view,
)
from .errors import DataError, ModelError
from .features import (
    FeatureSpec,
    SparseVector,
    TfidfModel,
    Vocabulary,
    char_ngrams,
    dense_to_vector,
    fit_tfidf,
    normalize,
    transform_tfidf,
    word_ngrams,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    McNemarResult,
    confusion,
    mcnemar,
    random_baseline,
    score,
)
from .modelio import load_ensemble, save_ensemble
from .report import FeatureRanking, render_confusion, top_features
from .svm import (
    DEFAULT_C_GRID,
    BinaryProblem,
    CvResult,
    LinearModel,
    grid_search_C,
    predict,
    train_binary,
    train_ovr,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryProblem",
    "ClassifierView",
    "ConfusionMatrix",
    "Corpus",
    "CvResult",
    "DEFAULT_C_GRID",
    "DataError",
    "EnsembleModel",
    "EvalReport",
    "FeatureRanking",
    "FeatureSpec",
    "FoldAssignment",
    "FusedPrediction",
    "Instance",
    "LinearModel",
    "McNemarResult",
    "ModelError",
    "SparseVector",
    "TfidfModel",
    "Vocabulary",
    "build_ensemble",
    "char_ngrams",
    "confusion",
    "default_specs",
    "dense_to_vector",
    "fit_tfidf",
    "fuse_predict",
    "fuse_votes",
    "grid_search_C",
    "load_corpus",
    "load_ensemble",
    "mcnemar",
    "normalize",
    "predict",
    "predict_corpus",
    "random_baseline",
    "render_confusion",
    "save_ensemble",
    "score",
    "select_views",
    "split",
    "stratified_folds",
    "top_features",
    "train_binary",
    "train_ovr",
    "train_view",
    "transform_tfidf",
    "word_ngrams",
]
