import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embrel import EmbeddingTable, PcaModel, PostVector, Strategy, compose_pair, embed_post, fit_pca
from embrel.compose import compose_pairs
from embrel.exceptions import DimMismatch, MissingPcaModel, TooFewRows


def test_embed_post_examples(tiny_table):
    pv = embed_post(tiny_table, ["a"])
    np.testing.assert_array_equal(pv.vector, [2, 4])
    assert (pv.used_tokens, pv.oov_tokens) == (1, 0)
    pv = embed_post(tiny_table, ["a", "zzz"])
    np.testing.assert_array_equal(pv.vector, [2, 4])
    assert (pv.used_tokens, pv.oov_tokens) == (1, 1)
    # component-wise mean of (2,4) and (0,0)
    np.testing.assert_array_equal(embed_post(tiny_table, ["a", "b"]).vector, [1, 2])


def test_embed_post_counts_duplicates(tiny_table):
    pv = embed_post(tiny_table, ["a", "a", "c"])
    np.testing.assert_allclose(pv.vector, [(2 + 2 + 1) / 3, (4 + 4 - 1) / 3], atol=1e-15)
    assert pv.used_tokens == 3


def test_all_oov_post_is_zero(tiny_table):
    pv = embed_post(tiny_table, ["x", "y"])
    np.testing.assert_array_equal(pv.vector, [0, 0])
    assert (pv.used_tokens, pv.oov_tokens) == (0, 2)
    assert embed_post(tiny_table, []).used_tokens == 0


def test_compose_examples():
    np.testing.assert_array_equal(compose_pair([1, 1], [3, 3], "sum"), [2, 2])
    np.testing.assert_array_equal(compose_pair([1, 2], [3, 4], Strategy.CON), [1, 2, 3, 4])
    np.testing.assert_array_equal(compose_pair([1, 2], [3, 4], "con", swap_order=True), [3, 4, 1, 2])
    p = PostVector(np.array([1.0, 2.0]), 1, 0)
    np.testing.assert_array_equal(compose_pair(p, p, "sum"), [1, 2])


def test_compose_errors():
    with pytest.raises(DimMismatch):
        compose_pair([1, 2], [1, 2, 3], "sum")
    with pytest.raises(MissingPcaModel):
        compose_pair([1, 2], [3, 4], "con_pca")
    pca = fit_pca(np.random.default_rng(0).standard_normal((10, 6)), 3)
    with pytest.raises(DimMismatch):
        compose_pair([1, 2], [3, 4], "con_pca", pca)
    with pytest.raises(ValueError):
        compose_pair([1, 2], [3, 4], "mean")


def test_con_pca_against_eigen_oracle(rng):
    rows = rng.standard_normal((10, 4)) @ np.diag([3.0, 2.0, 1.0, 0.5])
    pca = fit_pca(rows, 2)
    # oracle: eigen-decompose the 4x4 covariance directly with a different routine
    mean = rows.sum(axis=0) / 10
    cov = sum(np.outer(r - mean, r - mean) for r in rows) / 9
    w, V = np.linalg.eig(cov)
    order = np.argsort(-w.real)
    V = V.real[:, order]
    for i in range(2):
        v = V[:, i]
        j = int(np.argmax(np.abs(v)))
        V[:, i] = v if v[j] > 0 else -v
    p, q = rows[3, :2], rows[3, 2:]
    expected = V[:, :2].T @ (np.concatenate([p, q]) - mean)
    np.testing.assert_allclose(compose_pair(p, q, "con_pca", pca), expected, atol=1e-8)
    np.testing.assert_allclose(pca.eigenvalues, w.real[order][:2], rtol=1e-10)


def test_pca_rank_one_line():
    t = np.linspace(-2, 3, 7)
    rows = np.column_stack([t, 2 * t])
    pca = fit_pca(rows, 2)
    np.testing.assert_allclose(pca.components[0], np.array([1, 2]) / math.sqrt(5), atol=1e-12)
    assert pca.eigenvalues[1] == pytest.approx(0.0, abs=1e-12)
    assert fit_pca(rows, 1).output_dim == 1


def test_pca_ellipse_closed_form():
    theta = 2 * np.pi * np.arange(8) / 8
    rows = np.column_stack([3 * np.cos(theta), np.sin(theta)])
    pca = fit_pca(rows, 2)
    # sample covariance: diag(9 * 4/7, 4/7)
    np.testing.assert_allclose(pca.eigenvalues, [36 / 7, 4 / 7], rtol=1e-12)
    np.testing.assert_allclose(pca.components[0], [1, 0], atol=1e-12)
    np.testing.assert_allclose(np.abs(pca.components[1]), [0, 1], atol=1e-12)


def test_pca_full_rank_reconstruction(rng):
    rows = rng.standard_normal((30, 5))
    pca = fit_pca(rows, 5)
    centered = rows - rows.mean(axis=0)
    np.testing.assert_allclose(pca.project(rows) @ pca.components, centered, atol=1e-8)
    np.testing.assert_allclose(pca.back_project(pca.project(rows)), rows, atol=1e-8)


def test_pca_sign_convention(rng):
    pca = fit_pca(rng.standard_normal((40, 6)), 3)
    for c in pca.components:
        assert c[np.argmax(np.abs(c))] > 0


def test_pca_degenerate_eigenspace_is_deterministic():
    # isotropic data: every direction has the same variance
    base = np.vstack([np.eye(3), -np.eye(3)])
    models = [fit_pca(base, 3)] + [fit_pca(base[np.random.default_rng(s).permutation(6)], 3) for s in range(3)]
    for m in models[1:]:
        np.testing.assert_allclose(m.components, models[0].components, atol=1e-10)
    np.testing.assert_allclose(models[0].components, np.eye(3), atol=1e-10)


def test_pca_rank_deficient_trailing_components_are_canonical(rng):
    X = rng.standard_normal((20, 2)) @ rng.standard_normal((2, 5))
    a = fit_pca(X, 5)
    b = fit_pca(X[::-1], 5)
    np.testing.assert_allclose(a.components, b.components, atol=1e-8)
    np.testing.assert_allclose(a.components @ a.components.T, np.eye(5), atol=1e-8)
    assert np.all(a.eigenvalues[2:] == 0)


def test_pca_errors():
    with pytest.raises(TooFewRows):
        fit_pca([[1.0, 2.0]], 1)
    with pytest.raises(ValueError):
        fit_pca([[1.0, 2.0], [2.0, 1.0]], 3)


def test_pca_save_load_round_trip(rng):
    pca = fit_pca(rng.standard_normal((25, 8)), 4)
    buf = io.StringIO()
    pca.save(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "8 4" and len(lines) == 3 + 4
    again = PcaModel.load(io.StringIO(buf.getvalue()))
    np.testing.assert_array_equal(again.components, pca.components)
    np.testing.assert_array_equal(again.mean, pca.mean)
    np.testing.assert_array_equal(again.eigenvalues, pca.eigenvalues)


def test_compose_pairs_matches_rowwise(rng):
    P, Q = rng.standard_normal((6, 3)), rng.standard_normal((6, 3))
    pca = fit_pca(np.hstack([P, Q]), 3)
    for s in Strategy:
        M = compose_pairs(P, Q, s, pca)
        assert M.shape == (6, s.output_dim(3))
        for i in range(6):
            np.testing.assert_allclose(M[i], compose_pair(P[i], Q[i], s, pca), atol=1e-12)


table_st = st.integers(1, 6).flatmap(
    lambda d: st.lists(st.lists(st.floats(-10, 10, allow_nan=False), min_size=d, max_size=d), min_size=1, max_size=8)
)


@given(table_st, st.data())
def test_embed_post_permutation_invariant(rows, data):
    table = EmbeddingTable([f"t{i}" for i in range(len(rows))], rows)
    tokens = data.draw(st.lists(st.sampled_from(list(table.tokens) + ["oov"]), max_size=15))
    perm = data.draw(st.permutations(tokens))
    a = embed_post(table, tokens)
    b = embed_post(table, perm)
    assert a.vector.tobytes() == b.vector.tobytes()
    assert (a.used_tokens, a.oov_tokens) == (b.used_tokens, b.oov_tokens)


vec = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=3)


@given(vec, vec)
def test_sum_symmetric_con_directed(p, q):
    assert compose_pair(p, q, "sum").tobytes() == compose_pair(q, p, "sum").tobytes()
    pq, qp = compose_pair(p, q, "con"), compose_pair(q, p, "con")
    np.testing.assert_array_equal(pq[:3], p)
    np.testing.assert_array_equal(qp[:3], q)
    if p != q:
        assert not np.array_equal(pq, qp)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_pca_invariants(n, dim, seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((n, dim)) * r.uniform(0.1, 5, dim)
    k = max(1, dim // 2)
    pca = fit_pca(X, k)
    np.testing.assert_allclose(pca.components @ pca.components.T, np.eye(k), atol=1e-8)
    assert np.all(np.diff(pca.eigenvalues) <= 0)
    proj_var = pca.project(X).var(axis=0, ddof=1)
    scale = max(pca.eigenvalues[0], 1e-300)
    np.testing.assert_allclose(proj_var, pca.eigenvalues, rtol=1e-6, atol=1e-9 * scale)
