"""Post vectors by mean pooling, and pair vectors by SUM / CON / CON+PCA.

A post vector is the plain mean of the embeddings of its in-vocabulary
tokens (word order is irrelevant). A (post, opening post) pair becomes:

* ``sum``: the component-wise mean of the two post vectors (dim d),
* ``con``: post vector followed by opening-post vector (dim 2d),
* ``con_pca``: the concatenation projected onto its top d principal
  directions (dim d).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embeddings import EmbeddingTable
from .exceptions import DimMismatch, MissingPcaModel, TooFewRows
from .validation import check_matrix

# eigenvalues closer than this (relative to the largest) count as equal
_EIG_TIE_RTOL = 1e-10
_COORD_TOL = 1e-12


class Strategy(str, enum.Enum):
    SUM = "sum"
    CON = "con"
    CON_PCA = "con_pca"

    def output_dim(self, d: int) -> int:
        return 2 * d if self is Strategy.CON else d


@dataclass(frozen=True)
class PostVector:
    vector: np.ndarray
    used_tokens: int
    oov_tokens: int

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def embed_post(table: EmbeddingTable, tokens: Iterable[str]) -> PostVector:
    """Mean of the embeddings of in-vocabulary tokens, each occurrence counted.

    All-OOV (or empty) posts give the zero vector with ``used_tokens == 0``.
    """
    idx = []
    oov = 0
    for tok in tokens:
        vec_i = table._index.get(tok)
        if vec_i is None:
            oov += 1
        else:
            idx.append(vec_i)
    if not idx:
        return PostVector(np.zeros(table.dim), 0, oov)
    # summing in table order makes the result bit-identical under token permutation
    idx.sort()
    vec = table.vectors[idx].sum(axis=0) / len(idx)
    return PostVector(vec, len(idx), oov)


def embed_posts(table: EmbeddingTable, docs: Iterable[Iterable[str]]) -> tuple[np.ndarray, np.ndarray]:
    """Stack :func:`embed_post` over ``docs``; also return per-post used-token counts."""
    vecs = []
    used = []
    for tokens in docs:
        pv = embed_post(table, tokens)
        vecs.append(pv.vector)
        used.append(pv.used_tokens)
    if not vecs:
        return np.zeros((0, table.dim)), np.zeros(0, dtype=np.int64)
    return np.vstack(vecs), np.asarray(used, dtype=np.int64)


@dataclass(frozen=True)
class PcaModel:
    """Fitted projection: ``components @ (x - mean)``.

    ``components`` has one orthonormal row per retained direction, in
    descending eigenvalue order.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise DimMismatch(f"PCA expects dim {self.input_dim}, got {X.shape[-1]}")
        return (X - self.mean) @ self.components.T

    def back_project(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        return Z @ self.components + self.mean

    def save(self, fh: IO[str]) -> None:
        """Text format: ``input_dim output_dim``, mean line, eigenvalue line, one line per component."""
        def row(values):
            return " ".join(repr(float(x)) for x in values)

        fh.write(f"{self.input_dim} {self.output_dim}\n")
        fh.write(row(self.mean) + "\n")
        fh.write(row(self.eigenvalues) + "\n")
        for c in self.components:
            fh.write(row(c) + "\n")

    @classmethod
    def load(cls, fh: IO[str]) -> "PcaModel":
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty PCA model file")
        input_dim, output_dim = (int(x) for x in lines[0].split())
        if len(lines) != 3 + output_dim:
            raise ValueError(f"expected {3 + output_dim} lines, got {len(lines)}")
        mean = np.array(lines[1].split(), dtype=np.float64)
        eig = np.array(lines[2].split(), dtype=np.float64)
        comps = np.array([ln.split() for ln in lines[3:]], dtype=np.float64).reshape(output_dim, input_dim)
        if mean.shape != (input_dim,) or eig.shape != (output_dim,):
            raise ValueError("PCA model file has inconsistent dimensions")
        return cls(mean=mean, components=comps, eigenvalues=eig)


def _largest_coord_positive(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    j = int(np.flatnonzero(mags >= mags.max() - _COORD_TOL)[0])
    return -v if v[j] < 0 else v


def _first_coord_positive(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > _COORD_TOL)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _canonical_basis(V: np.ndarray) -> np.ndarray:
    """Basis of span(V's columns) that does not depend on which basis eigh returned.

    Gram-Schmidt over the projections of e_0, e_1, ... onto the subspace,
    then first-nonzero-positive signs and descending lexicographic order.
    """
    m = V.shape[1]
    P = V @ V.T
    basis: list[np.ndarray] = []
    for j in range(P.shape[0]):
        r = P[:, j].copy()
        for b in basis:
            r -= np.dot(b, r) * b
        norm = np.linalg.norm(r)
        if norm > 1e-6:
            r = r / norm
            # re-orthogonalize once for accuracy
            for b in basis:
                r -= np.dot(b, r) * b
            basis.append(r / np.linalg.norm(r))
            if len(basis) == m:
                break
    basis = [_first_coord_positive(b) for b in basis]
    basis.sort(key=lambda b: tuple(np.round(b, 12)), reverse=True)
    return np.array(basis)


def fit_pca(rows, output_dim: int) -> PcaModel:
    """Principal components from the eigendecomposition of the sample covariance.

    Covariance uses the ``n - 1`` normalization, so projected training data
    has sample variance equal to the eigenvalues. Each component's
    largest-magnitude coordinate is made positive. Within a group of equal
    eigenvalues (including the zero eigenvalues of rank-deficient data) the
    basis is canonicalized so the result is deterministic.
    """
    X = check_matrix(rows, "rows")
    n, D = X.shape
    if n < 2:
        raise TooFewRows(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= output_dim <= D:
        raise ValueError(f"output_dim must be in [1, {D}], got {output_dim}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    cov = (cov + cov.T) / 2
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]

    tol = _EIG_TIE_RTOL * evals[0]
    groups = []
    start = 0
    for i in range(1, D + 1):
        if i == D or evals[i - 1] - evals[i] > tol:
            groups.append((start, i))
            start = i

    comps = np.empty((D, D))
    for s, e in groups:
        if e - s == 1:
            comps[s] = _largest_coord_positive(evecs[:, s])
        else:
            comps[s:e] = _canonical_basis(evecs[:, s:e])
            evals[s:e] = evals[s:e].mean()
        if e >= output_dim:
            break
    return PcaModel(mean=mean, components=comps[:output_dim].copy(), eigenvalues=evals[:output_dim].copy())


def compose_pair(p, q, strategy: Strategy | str, pca: PcaModel | None = None, swap_order: bool = False) -> np.ndarray:
    """Pair vector of a post ``p`` and its opening post ``q``.

    ``p`` and ``q`` may be :class:`PostVector` or plain vectors. With
    ``swap_order`` the concatenation puts the opening post first.
    """
    strategy = Strategy(strategy)
    p = p.vector if isinstance(p, PostVector) else np.asarray(p, dtype=np.float64)
    q = q.vector if isinstance(q, PostVector) else np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimMismatch(f"post vectors differ in dimension: {p.shape} vs {q.shape}")
    if strategy is Strategy.SUM:
        return 0.5 * (p + q)
    cat = np.concatenate([q, p] if swap_order else [p, q])
    if strategy is Strategy.CON:
        return cat
    if pca is None:
        raise MissingPcaModel("con_pca needs a fitted PcaModel")
    if pca.input_dim != cat.shape[0]:
        raise DimMismatch(f"PCA expects dim {pca.input_dim}, concatenation has {cat.shape[0]}")
    return pca.project(cat)


class PrincipalComponents(BaseEstimator, TransformerMixin):
    """Transformer wrapper around :func:`fit_pca`.

    Parameters
    ----------
    n_components : int or None
        Number of directions kept. ``None`` keeps half the input dimension.
    """

    def __init__(self, n_components: int | None = None):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_matrix(X)
        k = self.n_components if self.n_components is not None else X.shape[1] // 2
        self.model_ = fit_pca(X, k)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return self.model_.project(check_matrix(X))

    def inverse_transform(self, Z):
        check_is_fitted(self, "model_")
        return self.model_.back_project(Z)


class MeanPoolingVectorizer(BaseEstimator, TransformerMixin):
    """Token lists to mean-pooled embedding rows. Stateless apart from the table."""

    def __init__(self, table: EmbeddingTable | None = None):
        self.table = table

    def fit(self, X, y=None):
        if self.table is None:
            raise ValueError("MeanPoolingVectorizer needs an embedding table")
        return self

    def __sklearn_is_fitted__(self) -> bool:
        return self.table is not None

    def transform(self, X) -> np.ndarray:
        return embed_posts(self.table, X)[0]


class PairComposer(BaseEstimator, TransformerMixin):
    """Compose (post, opening post) vector pairs into feature rows.

    ``X`` is an array of shape ``(n, 2, d)``: ``X[:, 0]`` holds post vectors,
    ``X[:, 1]`` opening-post vectors. Only ``con_pca`` learns anything in
    :meth:`fit` (the PCA basis, fitted on the concatenations).
    """

    def __init__(self, strategy: str = "con", swap_order: bool = False):
        self.strategy = strategy
        self.swap_order = swap_order

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[1] != 2:
            raise ValueError(f"expected shape (n, 2, d), got {X.shape}")
        return X

    def fit(self, X, y=None):
        X = self._check(X)
        strategy = Strategy(self.strategy)
        self.pca_ = None
        if strategy is Strategy.CON_PCA:
            cat = compose_pairs(X[:, 0], X[:, 1], Strategy.CON, swap_order=self.swap_order)
            self.pca_ = fit_pca(cat, X.shape[2])
        self.n_features_out_ = strategy.output_dim(X.shape[2])
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_out_")
        X = self._check(X)
        return compose_pairs(X[:, 0], X[:, 1], self.strategy, self.pca_, self.swap_order)


def compose_pairs(P: np.ndarray, Q: np.ndarray, strategy: Strategy | str, pca: PcaModel | None = None,
                  swap_order: bool = False) -> np.ndarray:
    """Row-wise :func:`compose_pair` over stacked post / opening-post matrices."""
    strategy = Strategy(strategy)
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise DimMismatch(f"post matrices differ in shape: {P.shape} vs {Q.shape}")
    if strategy is Strategy.SUM:
        return 0.5 * (P + Q)
    cat = np.hstack([Q, P] if swap_order else [P, Q])
    if strategy is Strategy.CON:
        return cat
    if pca is None:
        raise MissingPcaModel("con_pca needs a fitted PcaModel")
    return pca.project(cat)
