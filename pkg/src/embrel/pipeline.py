"""End-to-end relatedness evaluation: texts -> post vectors -> pair features -> CV."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .classify import DEFAULT_FOLDS, DEFAULT_NEIGHBORS, DEFAULT_SEED, CvResult, LearningCurve, cross_validate, learning_curve
from .compose import PrincipalComponents, Strategy, compose_pairs, embed_posts, fit_pca
from .dataset import PostPairRecord
from .embeddings import EmbeddingTable
from .textproc import preprocess

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenizedPairs:
    posts: list[list[str]]
    op_posts: list[list[str]]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class PairVectors:
    posts: np.ndarray
    op_posts: np.ndarray
    labels: np.ndarray
    n_all_oov_posts: int

    @property
    def dim(self) -> int:
        return self.posts.shape[1]


@dataclass(frozen=True)
class RelatednessResult:
    model: str
    strategy: Strategy
    dim: int
    cv: CvResult
    n_all_oov_posts: int


def tokenize_pairs(records: Sequence[PostPairRecord], lemmas: Mapping[str, str] | None = None) -> TokenizedPairs:
    # op_posts repeat a lot, so cache their token lists
    cache: dict[str, list[str]] = {}

    def tok(text):
        if text not in cache:
            cache[text] = preprocess(text, lemmas)
        return cache[text]

    return TokenizedPairs(
        posts=[tok(r.post) for r in records],
        op_posts=[tok(r.op_post) for r in records],
        labels=np.array([r.is_related for r in records], dtype=np.int64),
    )


def vectorize_pairs(pairs: TokenizedPairs, table: EmbeddingTable) -> PairVectors:
    P, used_p = embed_posts(table, pairs.posts)
    Q, used_q = embed_posts(table, pairs.op_posts)
    n_zero = int(np.sum(used_p == 0) + np.sum(used_q == 0))
    if n_zero:
        logger.info("%s: %d post(s) had no in-vocabulary token (zero vectors kept)", table.name, n_zero)
    return PairVectors(P, Q, pairs.labels, n_zero)


def pair_features(vectors: PairVectors, strategy: Strategy | str, *, swap_order: bool = False,
                  pca_per_fold: bool = False):
    """Feature matrix for ``strategy`` plus the per-fold transformer, if any.

    For ``con_pca`` the PCA is fitted once on all concatenations unless
    ``pca_per_fold`` is set, in which case the concatenations are returned
    with a :class:`PrincipalComponents` to be fitted inside each fold.
    """
    strategy = Strategy(strategy)
    P, Q = vectors.posts, vectors.op_posts
    if strategy is not Strategy.CON_PCA:
        return compose_pairs(P, Q, strategy, swap_order=swap_order), None
    cat = compose_pairs(P, Q, Strategy.CON, swap_order=swap_order)
    if pca_per_fold:
        return cat, PrincipalComponents(n_components=vectors.dim)
    pca = fit_pca(cat, vectors.dim)
    return pca.project(cat), None


def evaluate_relatedness(
    vectors: PairVectors,
    strategy: Strategy | str,
    *,
    model: str = "",
    neighbors_k: int = DEFAULT_NEIGHBORS,
    folds: int = DEFAULT_FOLDS,
    seed: int = DEFAULT_SEED,
    swap_order: bool = False,
    pca_per_fold: bool = False,
    n_jobs: int = 1,
) -> RelatednessResult:
    strategy = Strategy(strategy)
    X, tf = pair_features(vectors, strategy, swap_order=swap_order, pca_per_fold=pca_per_fold)
    cv = cross_validate(X, vectors.labels, folds, neighbors_k, seed, fold_transform=tf, n_jobs=n_jobs)
    dim = strategy.output_dim(vectors.dim)
    return RelatednessResult(model, strategy, dim, cv, vectors.n_all_oov_posts)


def relatedness_curve(
    vectors: PairVectors,
    strategy: Strategy | str,
    fractions: Sequence[float],
    *,
    neighbors_k: int = DEFAULT_NEIGHBORS,
    folds: int = DEFAULT_FOLDS,
    seed: int = DEFAULT_SEED,
    swap_order: bool = False,
    pca_per_fold: bool = False,
    n_jobs: int = 1,
) -> LearningCurve:
    X, tf = pair_features(vectors, strategy, swap_order=swap_order, pca_per_fold=pca_per_fold)
    return learning_curve(X, vectors.labels, fractions, folds, neighbors_k, seed, fold_transform=tf, n_jobs=n_jobs)
