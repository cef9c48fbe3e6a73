"""Cosine-metric k-nearest-neighbours classifier and its evaluation protocol.

Neighbour search is exhaustive. Equal distances are resolved in favour of
the lower training index and tied votes (even k only) go to label 1.
Cross-validation uses stratified folds dealt from a seeded permutation, so
the same seed gives the same folds on every platform and regardless of
``n_jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_is_fitted

from .exceptions import DimMismatch, SingleClassData, TooFewInstances, TooFewTrainingPoints
from .metrics import ConfusionCounts, f1_score
from .validation import check_binary_labels, check_matrix

DEFAULT_SEED = 2663
DEFAULT_FOLDS = 10
DEFAULT_NEIGHBORS = 3


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    safe = np.where(norms == 0.0, 1.0, norms)
    return X / safe[:, None]


class CosineKNNClassifier(BaseEstimator, ClassifierMixin):
    """Binary k-NN with cosine distance ``1 - cos(u, v)``.

    Zero vectors are at distance 1 from everything.

    Parameters
    ----------
    n_neighbors : int, default=3
    """

    def __init__(self, n_neighbors: int = DEFAULT_NEIGHBORS):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        X = check_matrix(X)
        y = check_binary_labels(y, X.shape[0])
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be positive")
        if X.shape[0] < self.n_neighbors:
            raise TooFewTrainingPoints(
                f"{X.shape[0]} training points for n_neighbors={self.n_neighbors}"
            )
        self.unit_X_ = _unit_rows(X)
        self.y_ = y
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def kneighbors(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Distances and training indices of the nearest neighbours, nearest first."""
        check_is_fitted(self, "unit_X_")
        X = check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DimMismatch(f"query dim {X.shape[1]} != training dim {self.n_features_in_}")
        dist = 1.0 - _unit_rows(X) @ self.unit_X_.T
        # stable sort keeps lower training index first among equal distances
        idx = np.argsort(dist, axis=1, kind="stable")[:, : self.n_neighbors]
        return np.take_along_axis(dist, idx, axis=1), idx

    def predict(self, X) -> np.ndarray:
        _, idx = self.kneighbors(X)
        votes = self.y_[idx].sum(axis=1)
        return (2 * votes >= self.n_neighbors).astype(np.int64)


def knn_predict(model: CosineKNNClassifier, query) -> int:
    """Label of a single query vector."""
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1:
        raise ValueError("query must be a single vector")
    return int(model.predict(q[None, :])[0])


@dataclass(frozen=True)
class CvResult:
    fold_f1: tuple[float, ...]
    fold_counts: tuple[ConfusionCounts, ...]
    folds: np.ndarray = field(repr=False)

    @property
    def mean_f1(self) -> float:
        return float(np.mean(self.fold_f1))

    @property
    def std_f1(self) -> float:
        return float(np.std(self.fold_f1))

    @property
    def n_folds(self) -> int:
        return len(self.fold_f1)


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    mean_f1: float
    std_f1: float
    train_size: int


@dataclass(frozen=True)
class LearningCurve:
    points: tuple[CurvePoint, ...]


def stratified_folds(labels, n_folds: int, seed: int) -> np.ndarray:
    """Fold index per sample.

    Each class is shuffled with a seeded permutation and dealt round-robin;
    the dealing position carries over from class 0 to class 1 so fold sizes
    differ by at most one.
    """
    y = check_binary_labels(labels)
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if len(y) < n_folds:
        raise TooFewInstances(f"{len(y)} instances for {n_folds} folds")
    if len(np.unique(y)) < 2:
        raise SingleClassData("both classes must be present")
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(len(members))]
        assignment[members] = (offset + np.arange(len(members))) % n_folds
        offset = (offset + len(members)) % n_folds
    return assignment


def _check_cv_inputs(features, labels, n_folds, neighbors_k, seed):
    X = check_matrix(features, "features")
    y = check_binary_labels(labels, X.shape[0])
    folds = stratified_folds(y, n_folds, seed)
    smallest_train = len(y) - np.bincount(folds, minlength=n_folds).max()
    if smallest_train < neighbors_k:
        raise TooFewInstances(
            f"smallest training split has {smallest_train} points, need {neighbors_k}"
        )
    return X, y, folds


def _fit_eval(X, y, train_idx, test_idx, neighbors_k, fold_transform) -> ConfusionCounts:
    X_train, X_test = X[train_idx], X[test_idx]
    if fold_transform is not None:
        tf = clone(fold_transform).fit(X_train, y[train_idx])
        X_train, X_test = tf.transform(X_train), tf.transform(X_test)
    clf = CosineKNNClassifier(n_neighbors=neighbors_k).fit(X_train, y[train_idx])
    return ConfusionCounts.from_labels(y[test_idx], clf.predict(X_test))


def _run(tasks, n_jobs: int):
    if n_jobs == 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
        return list(pool.map(lambda t: t(), tasks))


def cross_validate(
    features,
    labels,
    folds: int = DEFAULT_FOLDS,
    neighbors_k: int = DEFAULT_NEIGHBORS,
    seed: int = DEFAULT_SEED,
    *,
    fold_transform=None,
    n_jobs: int = 1,
) -> CvResult:
    """Stratified k-fold evaluation of :class:`CosineKNNClassifier` by F1 on label 1.

    ``fold_transform`` is an unfitted sklearn transformer, cloned and fitted
    on each training split (e.g. per-fold PCA).
    """
    X, y, assignment = _check_cv_inputs(features, labels, folds, neighbors_k, seed)
    tasks = []
    for f in range(folds):
        test_idx = np.flatnonzero(assignment == f)
        train_idx = np.flatnonzero(assignment != f)
        tasks.append(lambda tr=train_idx, te=test_idx: _fit_eval(X, y, tr, te, neighbors_k, fold_transform))
    counts = _run(tasks, n_jobs)
    return CvResult(
        fold_f1=tuple(f1_score(c) for c in counts),
        fold_counts=tuple(counts),
        folds=assignment,
    )


def _subset_size(fraction: float, n: int) -> int:
    # guard against 0.3 * 10 == 3.0000000000000004
    return max(1, math.ceil(round(fraction * n, 9)))


def learning_curve(
    features,
    labels,
    fractions: Sequence[float],
    folds: int = DEFAULT_FOLDS,
    neighbors_k: int = DEFAULT_NEIGHBORS,
    seed: int = DEFAULT_SEED,
    *,
    fold_transform=None,
    n_jobs: int = 1,
) -> LearningCurve:
    """F1 against training-set size under the same folds as :func:`cross_validate`.

    For fraction ``f`` each split trains on the first ``ceil(f * n_train)``
    training points of a seeded permutation (kept in their original order)
    and tests on the full held-out fold, so ``f = 1.0`` reproduces
    :func:`cross_validate` exactly. Subsets are nested across fractions.
    """
    fractions = [float(f) for f in fractions]
    if not fractions:
        raise ValueError("need at least one fraction")
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fractions must be strictly increasing")
    X, y, assignment = _check_cv_inputs(features, labels, folds, neighbors_k, seed)

    # all permutations are drawn up front so parallel evaluation cannot change them
    splits = []
    for f in range(folds):
        train_idx = np.flatnonzero(assignment != f)
        test_idx = np.flatnonzero(assignment == f)
        perm = np.random.default_rng([seed, f]).permutation(len(train_idx))
        splits.append((train_idx, test_idx, perm))

    points = []
    for frac in fractions:
        tasks = []
        sizes = []
        for train_idx, test_idx, perm in splits:
            m = _subset_size(frac, len(train_idx))
            if m < neighbors_k:
                raise TooFewTrainingPoints(
                    f"fraction {frac} leaves {m} training points, need {neighbors_k}"
                )
            sub = train_idx[np.sort(perm[:m])]
            sizes.append(m)
            tasks.append(lambda tr=sub, te=test_idx: _fit_eval(X, y, tr, te, neighbors_k, fold_transform))
        scores = [f1_score(c) for c in _run(tasks, n_jobs)]
        points.append(CurvePoint(frac, float(np.mean(scores)), float(np.std(scores)), int(round(np.mean(sizes)))))
    return LearningCurve(points=tuple(points))
