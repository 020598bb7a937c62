"""L2-regularized squared-hinge linear SVMs trained by dual coordinate descent.

The trainer minimizes  1/2 ||w||^2 + C * sum_i max(0, 1 - y_i <w, x_i>)^2  in
its dual form: one alpha per instance, lower-bounded at zero, with a diagonal
regularization term D = 1/(2C). Each coordinate step solves its one-variable
subproblem exactly, so the dual objective never decreases. Convergence is
declared when the largest projected-gradient violation seen in an epoch drops
to ``tol``.

Many binary problems over the same design matrix (one-vs-rest classes, a grid
of C values) are trained in lock step: one shared, seeded permutation stream
drives all of them, and each problem's update sequence is exactly the sequence
it would see if trained alone with that seed. Converged problems drop out of
the working set as they finish.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .errors import DataError
from .features import SparseVector

DEFAULT_C_GRID: tuple[float, ...] = tuple(10.0**e for e in range(-5, 6))
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 1000
DEFAULT_SEED = 0

_PG_EPS = 1e-12


@dataclass(frozen=True)
class BinaryProblem:
    """A two-class training set over raw feature vectors of width ``dim``.

    The trainer augments every instance with a constant bias feature of value
    1, so weight vectors come back with ``dim + 1`` entries, bias last.
    """

    x: tuple[SparseVector, ...]
    y: tuple[int, ...]
    dim: int
    C: float

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise DataError("feature/label length mismatch")
        if not self.x:
            raise DataError("empty problem")
        if any(label not in (-1, 1) for label in self.y):
            raise DataError("binary labels must be -1 or +1")
        if self.C <= 0:
            raise DataError(f"C must be positive, got {self.C}")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """One-vs-rest weight matrix; the last column of each row is the bias."""

    classes: tuple[str, ...]
    weights: np.ndarray  # shape (L, dim + 1)
    C: float
    tol: float
    max_iter: int

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1]) - 1


@dataclass(frozen=True)
class CvResult:
    grid: tuple[float, ...]
    mean_accuracy: tuple[float, ...]
    best_C: float


@dataclass
class TrainInfo:
    """Per-problem diagnostics from one dual coordinate descent run."""

    epochs: int
    converged: bool
    dual_objective: list[float]  # one value per epoch, maximization form


class _Csr:
    """Row-major sparse matrix with an appended constant bias column."""

    __slots__ = ("data", "indices", "indptr", "n_rows", "dim", "row_sq_norms")

    def __init__(self, vectors: Sequence[SparseVector], dim: int) -> None:
        n = len(vectors)
        nnz_total = sum(v.nnz + 1 for v in vectors)
        data = np.empty(nnz_total, dtype=np.float64)
        indices = np.empty(nnz_total, dtype=np.int64)
        indptr = np.empty(n + 1, dtype=np.int64)
        indptr[0] = 0
        pos = 0
        for i, vec in enumerate(vectors):
            if vec.nnz and vec.indices[-1] >= dim:
                raise DataError(
                    f"feature index {int(vec.indices[-1])} out of range for dim {dim}"
                )
            k = vec.nnz
            indices[pos : pos + k] = vec.indices
            data[pos : pos + k] = vec.values
            indices[pos + k] = dim  # bias slot
            data[pos + k] = 1.0
            pos += k + 1
            indptr[i + 1] = pos
        self.data = data
        self.indices = indices
        self.indptr = indptr
        self.n_rows = n
        self.dim = dim + 1
        sq = np.empty(n, dtype=np.float64)
        for i in range(n):
            row = data[indptr[i] : indptr[i + 1]]
            sq[i] = row @ row
        self.row_sq_norms = sq

    def decision_values(self, weights: np.ndarray) -> np.ndarray:
        """Scores for every row against ``weights`` of shape (dim+1, M)."""
        out = np.empty((self.n_rows, weights.shape[1]), dtype=np.float64)
        for i in range(self.n_rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i] = self.data[lo:hi] @ weights[self.indices[lo:hi]]
        return out


@numba.njit(cache=True)
def _epoch_sweep(data, indices, indptr, perm, Y, A, W, Dreg, Qd, max_pg):
    """One coordinate descent pass over all instances for M lock-step problems.

    Mutates ``A`` (dual variables, shape (n, M)), ``W`` (weights, shape
    (M, dim)), and ``max_pg`` (largest projected-gradient violation seen per
    problem). Problems share the permutation; their updates are independent.
    """
    M = W.shape[0]
    for pi in range(perm.size):
        i = perm[pi]
        lo = indptr[i]
        hi = indptr[i + 1]
        for m in range(M):
            s = 0.0
            for p in range(lo, hi):
                s += data[p] * W[m, indices[p]]
            a = A[i, m]
            g = s * Y[i, m] - 1.0 + Dreg[m] * a
            if a <= 0.0 and g > 0.0:
                pg = 0.0
            else:
                pg = g
            abs_pg = abs(pg)
            if abs_pg > max_pg[m]:
                max_pg[m] = abs_pg
            if abs_pg > _PG_EPS:
                a_new = a - g / Qd[i, m]
                if a_new < 0.0:
                    a_new = 0.0
                delta = (a_new - a) * Y[i, m]
                A[i, m] = a_new
                for p in range(lo, hi):
                    W[m, indices[p]] += delta * data[p]


def _dual_cd(
    mat: _Csr,
    Y: np.ndarray,
    Dreg: np.ndarray,
    tol: float,
    max_iter: int,
    seed: int,
    track_objective: bool = False,
) -> tuple[np.ndarray, list[TrainInfo]]:
    """Train M lock-step problems; returns weights (dim+1, M) and diagnostics.

    ``Y`` is (n, M) with entries in {-1, +1}; ``Dreg`` is the per-problem
    diagonal regularizer 1/(2C). Problems leave the working set as they
    converge; the permutation stream they see depends only on the seed and
    the epoch index, so a problem's update sequence does not change with the
    company it keeps.
    """
    n = mat.n_rows
    M = Y.shape[1]
    data, indices, indptr = mat.data, mat.indices, mat.indptr
    q_base = mat.row_sq_norms

    w_out = np.zeros((mat.dim, M), dtype=np.float64)
    infos = [TrainInfo(epochs=0, converged=False, dual_objective=[]) for _ in range(M)]

    W = np.zeros((M, mat.dim), dtype=np.float64)
    A = np.zeros((n, M), dtype=np.float64)
    Yw = np.ascontiguousarray(Y, dtype=np.float64)
    Dw = np.asarray(Dreg, dtype=np.float64).copy()
    Qd = np.ascontiguousarray(q_base[:, None] + Dw[None, :])
    orig = np.arange(M)

    rng = np.random.default_rng(seed)
    for epoch in range(1, max_iter + 1):
        perm = rng.permutation(n)
        max_pg = np.zeros(orig.size, dtype=np.float64)
        _epoch_sweep(data, indices, indptr, perm, Yw, A, W, Dw, Qd, max_pg)

        if track_objective:
            sum_a = A.sum(axis=0)
            sq_w = np.einsum("md,md->m", W, W)
            sq_a = np.einsum("nm,nm->m", A, A)
            objective = sum_a - 0.5 * sq_w - 0.5 * Dw * sq_a
            for slot, m in enumerate(orig):
                infos[m].dual_objective.append(float(objective[slot]))
        for m in orig:
            infos[m].epochs = epoch

        done = max_pg <= tol
        if done.any():
            for slot in np.flatnonzero(done):
                m = orig[slot]
                infos[m].converged = True
                w_out[:, m] = W[slot]
            keep = ~done
            if not keep.any():
                return w_out, infos
            W = np.ascontiguousarray(W[keep])
            A = np.ascontiguousarray(A[:, keep])
            Yw = np.ascontiguousarray(Yw[:, keep])
            Dw = Dw[keep]
            Qd = np.ascontiguousarray(Qd[:, keep])
            orig = orig[keep]

    for slot, m in enumerate(orig):
        w_out[:, m] = W[slot]
    return w_out, infos


def train_binary(
    problem: BinaryProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
    full_output: bool = False,
):
    """Train one binary SVM; returns a weight vector of length ``dim + 1``
    whose last entry is the bias.

    With ``full_output=True`` also returns a TrainInfo carrying the epoch
    count, convergence flag, and the per-epoch dual objective (maximization
    form, nondecreasing).
    """
    labels = set(problem.y)
    if labels == {1} or labels == {-1}:
        raise DataError("degenerate problem: only one class present")
    mat = _Csr(problem.x, problem.dim)
    Y = np.asarray(problem.y, dtype=np.float64)[:, None]
    Dreg = np.array([1.0 / (2.0 * problem.C)])
    W, infos = _dual_cd(
        mat, Y, Dreg, tol=tol, max_iter=max_iter, seed=seed, track_objective=full_output
    )
    w = W[:, 0]
    if full_output:
        return w, infos[0]
    return w


def train_ovr(
    x: Sequence[SparseVector],
    y: Sequence[str],
    classes: Sequence[str],
    C: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> LinearModel:
    """Train one-vs-rest binary separators, one per class.

    Vectors are plain feature vectors; the bias slot is appended internally.
    Classes are sorted lexicographically. Every class must appear in ``y``
    (a class with no positives is a degenerate binary problem).
    """
    if len(x) != len(y):
        raise DataError("feature/label length mismatch")
    if not x:
        raise DataError("empty problem")
    ordered = tuple(sorted(set(classes)))
    if len(ordered) < 2:
        raise DataError("degenerate problem: need at least 2 classes")
    present = set(y)
    for cls in ordered:
        if cls not in present:
            raise DataError(f"degenerate problem: class '{cls}' has no instances")
    if len(present - set(ordered)):
        extra = sorted(present - set(ordered))[0]
        raise DataError(f"label '{extra}' not in class list")

    dim = _infer_dim(x)
    mat = _Csr(x, dim)
    Y = np.empty((len(x), len(ordered)), dtype=np.float64)
    y_arr = np.asarray(y, dtype=object)
    for j, cls in enumerate(ordered):
        Y[:, j] = np.where(y_arr == cls, 1.0, -1.0)
    Dreg = np.full(len(ordered), 1.0 / (2.0 * C))
    W, _ = _dual_cd(mat, Y, Dreg, tol=tol, max_iter=max_iter, seed=seed)
    return LinearModel(
        classes=ordered, weights=W.T.copy(), C=C, tol=tol, max_iter=max_iter
    )


def _infer_dim(vectors: Sequence[SparseVector]) -> int:
    dim = 0
    for vec in vectors:
        if vec.nnz:
            dim = max(dim, int(vec.indices[-1]) + 1)
    return dim


def decision_values(model: LinearModel, x: SparseVector) -> np.ndarray:
    """Per-class decision values for one (un-augmented) feature vector."""
    W = model.weights
    if x.nnz and int(x.indices[-1]) >= W.shape[1] - 1:
        raise DataError(
            f"feature index {int(x.indices[-1])} out of range for model dim {W.shape[1] - 1}"
        )
    return W[:, x.indices] @ x.values + W[:, -1]


def predict(model: LinearModel, x: SparseVector) -> tuple[str, np.ndarray]:
    """Predict the argmax class; ties go to the lexicographically first class.

    Returns the label and the full per-class margin vector (aligned with
    ``model.classes``) for downstream fusion.
    """
    margins = decision_values(model, x)
    return model.classes[int(np.argmax(margins))], margins


def _fold_slices(fold_index: Sequence[int], k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    fold_arr = np.asarray(fold_index, dtype=np.int64)
    out = []
    for f in range(k):
        dev = np.flatnonzero(fold_arr == f)
        train = np.flatnonzero(fold_arr != f)
        out.append((train, dev))
    return out


def cv_accuracy_matrix(
    fold_datasets: Sequence[tuple[Sequence[SparseVector], Sequence[str], Sequence[SparseVector], Sequence[str]]],
    classes: Sequence[str],
    grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """Held-out accuracy for every (C, fold) pair.

    Each fold trains all grid points and all one-vs-rest classes in a single
    lock-step descent over the fold's training matrix.
    """
    ordered = tuple(sorted(set(classes)))
    L = len(ordered)
    n_grid = len(grid)
    acc = np.empty((n_grid, len(fold_datasets)), dtype=np.float64)
    class_index = {cls: j for j, cls in enumerate(ordered)}
    for f, (x_tr, y_tr, x_dev, y_dev) in enumerate(fold_datasets):
        dim = max(_infer_dim(x_tr), _infer_dim(x_dev))
        mat = _Csr(x_tr, dim)
        y_arr = np.asarray(y_tr, dtype=object)
        signs = np.empty((len(x_tr), L), dtype=np.float64)
        for j, cls in enumerate(ordered):
            signs[:, j] = np.where(y_arr == cls, 1.0, -1.0)
        for cls in ordered:
            if not np.any(y_arr == cls):
                raise DataError(f"degenerate problem: class '{cls}' has no instances")
        Y = np.tile(signs, (1, n_grid))
        Dreg = np.repeat([1.0 / (2.0 * c) for c in grid], L)
        W, _ = _dual_cd(mat, Y, Dreg, tol=tol, max_iter=max_iter, seed=seed)
        dev_mat = _Csr(x_dev, dim)
        scores = dev_mat.decision_values(W)  # (n_dev, n_grid * L)
        gold = np.fromiter((class_index[lbl] for lbl in y_dev), dtype=np.int64)
        for gi in range(n_grid):
            block = scores[:, gi * L : (gi + 1) * L]
            pred = np.argmax(block, axis=1)
            acc[gi, f] = float(np.mean(pred == gold))
    return acc


def select_best_c(grid: Sequence[float], mean_accuracy: Sequence[float]) -> float:
    """Highest mean accuracy wins; exact ties break toward the smaller C."""
    best_acc = max(mean_accuracy)
    return min(c for c, a in zip(grid, mean_accuracy) if a == best_acc)


def grid_search_C(
    x: Sequence[SparseVector],
    y: Sequence[str],
    classes: Sequence[str],
    fold_index: Sequence[int],
    grid: Sequence[float] = DEFAULT_C_GRID,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> CvResult:
    """Cross-validated search over C on fixed feature vectors.

    ``fold_index`` assigns each instance to a fold; every fold is held out
    once and the per-C accuracies are averaged across folds.
    """
    if not grid:
        raise DataError("empty C grid")
    if len(x) != len(y) or len(x) != len(fold_index):
        raise DataError("feature/label/fold length mismatch")
    k = int(max(fold_index)) + 1
    datasets = []
    for train_idx, dev_idx in _fold_slices(fold_index, k):
        if train_idx.size == 0 or dev_idx.size == 0:
            raise DataError("fold with no train or no dev instances")
        datasets.append(
            (
                [x[i] for i in train_idx],
                [y[i] for i in train_idx],
                [x[i] for i in dev_idx],
                [y[i] for i in dev_idx],
            )
        )
    acc = cv_accuracy_matrix(datasets, classes, grid, tol=tol, max_iter=max_iter, seed=seed)
    means = tuple(float(v) for v in acc.mean(axis=1))
    return CvResult(grid=tuple(grid), mean_accuracy=means, best_C=select_best_c(grid, means))
