import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from a2lp.core import KOutOfRange, NNDescentParams
from a2lp.graph import (IsolatedNodeWarning, ZeroVector, build_knn_affinity, knn_brute,
                        knn_indices, knn_recall, normalize, similarity, symmetrize)

METRICS = ["cosine", "gaussian", "scalar3"]


def oracle_knn(X, k, metric):
    """Full sort of every row by (-similarity, index)."""
    n = len(X)
    out = np.empty((n, k), dtype=int)
    for j in range(n):
        keys = []
        for i in range(n):
            if i == j:
                continue
            if metric == "gaussian":
                key = float(np.sum((X[i] - X[j]) ** 2))
            elif metric == "cosine":
                key = -float(X[i] @ X[j] / (np.linalg.norm(X[i]) * np.linalg.norm(X[j])))
            else:
                key = -float(X[i] @ X[j])
            keys.append((key, i))
        keys.sort()
        out[j] = [i for _, i in keys[:k]]
    return out


def test_cosine_value():
    assert abs(similarity("cosine", [1, 0], [1, 1]) - 1 / math.sqrt(2)) <= 1e-9


def test_similarity_identities():
    u = np.array([0.3, -2.0, 1.0])
    assert similarity("cosine", u, u) == pytest.approx(1.0, abs=1e-15)
    assert similarity("gaussian", u, u) == 1.0
    assert similarity("cosine", [1, 0], [0, 1]) == 0.0
    assert similarity("cosine", [1, 0], [-1, 0]) == 0.0
    assert similarity("scalar3", [1, 2], [3, 1]) == 125.0
    assert similarity("gaussian", [0, 0], [1, 1]) == pytest.approx(math.exp(-1.0))


def test_cosine_zero_vector():
    with pytest.raises(ZeroVector):
        similarity("cosine", [0, 0], [1, 0])


def test_cosine_extreme_scales():
    tiny, huge = [5e-324, 5e-324], [1e300, 1e300]
    assert similarity("cosine", tiny, tiny) == 1.0
    assert similarity("cosine", huge, [1e300, 0.0]) == pytest.approx(1 / math.sqrt(2))
    assert similarity("cosine", tiny, huge) == pytest.approx(1.0)


finite = st.floats(min_value=-10, max_value=10, allow_nan=False)


@given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite),
       st.sampled_from(METRICS))
def test_similarity_symmetric_nonnegative(u, v, metric):
    if metric == "cosine" and (not np.any(u) or not np.any(v)):
        with pytest.raises(ZeroVector):
            similarity(metric, u, v)
        return
    a, b = similarity(metric, u, v), similarity(metric, v, u)
    assert a == b
    assert a >= 0 and math.isfinite(a)


def test_line_k1_gaussian():
    X = np.array([[0.0], [1.0], [3.0]])
    A = build_knn_affinity(X, 1, "gaussian").toarray()
    # column j holds the nearest neighbor of j
    assert np.count_nonzero(A, axis=0).tolist() == [1, 1, 1]
    assert A[1, 0] == pytest.approx(math.exp(-0.5))
    assert A[0, 1] == pytest.approx(math.exp(-0.5))  # tie 0 vs 2 at distance 1 and 2 -> 0
    assert A[1, 2] == pytest.approx(math.exp(-2.0))


def test_identical_points_mutual():
    X = np.array([[1.0, 2.0], [5.0, -1.0], [1.0, 2.0], [-3.0, 0.5], [0.0, 4.0]])
    A = build_knn_affinity(X, 1, "cosine").toarray()
    assert A[0, 2] == 1.0 and A[2, 0] == 1.0


def test_ties_go_to_lower_index():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    idx = knn_brute(X, 2, "gaussian")
    assert idx[0].tolist() == [1, 2]


def test_columns_hold_k_entries(rng):
    X = rng.normal(size=(40, 3))
    for metric in METRICS:
        A = build_knn_affinity(X, 4, metric)
        assert np.all(np.diff(A.tocsc().indptr) == 4)
        assert A.diagonal().sum() == 0


@pytest.mark.parametrize("metric", METRICS)
def test_brute_matches_sort_oracle(rng, metric):
    X = rng.normal(size=(30, 4))
    X[7] = X[3]  # exact duplicate
    np.testing.assert_array_equal(knn_brute(X, 5, metric), oracle_knn(X, 5, metric))


def test_brute_small_chunks_agree(rng):
    X = rng.normal(size=(60, 5))
    np.testing.assert_array_equal(knn_brute(X, 6, "cosine"), knn_brute(X, 6, "cosine", chunk_bytes=800))


def test_k_out_of_range(rng):
    X = rng.normal(size=(5, 2))
    with pytest.raises(KOutOfRange):
        knn_brute(X, 5)


def test_nn_descent_recall_on_clusters(rng):
    centers = rng.normal(scale=5.0, size=(3, 8))
    X = centers[rng.integers(0, 3, 50)] + rng.normal(size=(50, 8))
    exact = oracle_knn(X, 5, "cosine")
    approx = knn_indices(X, 5, "cosine", "nn_descent", seed=1)
    assert knn_recall(approx, exact) >= 0.90


@pytest.mark.parametrize("metric", METRICS)
def test_nn_descent_exact_with_full_leaf(rng, metric):
    X = rng.normal(size=(200, 6))
    params = NNDescentParams(n_trees=1, leaf_size=200)
    np.testing.assert_array_equal(knn_indices(X, 7, metric, "nn_descent", params=params),
                                  knn_brute(X, 7, metric))


def test_brute_permutation_equivariant(rng):
    X = rng.normal(size=(50, 3))
    p = rng.permutation(50)
    A = build_knn_affinity(X, 4, "gaussian").toarray()
    Ap = build_knn_affinity(X[p], 4, "gaussian").toarray()
    np.testing.assert_array_equal(Ap, A[np.ix_(p, p)])


def test_symmetrize_examples():
    A = sp.csr_matrix(([0.5], ([0], [1])), shape=(3, 3))
    S = symmetrize(A).toarray()
    assert S[0, 1] == S[1, 0] == 0.5
    B = sp.csr_matrix(([0.5, 0.3], ([0, 1], [1, 0])), shape=(2, 2))
    assert symmetrize(B).toarray().tolist() == [[0.0, 0.8], [0.8, 0.0]]
    assert symmetrize(sp.csr_matrix((4, 4))).nnz == 0


def test_normalize_two_nodes():
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert normalize(A).toarray().tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_normalize_path():
    A = sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))
    # d = (1, 2, 1), so S(1,2) = 1 / sqrt(1 * 2)
    assert abs(normalize(A)[0, 1] - 1 / math.sqrt(2)) <= 1e-9


def test_normalize_isolated_node():
    A = sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=float))
    with pytest.warns(IsolatedNodeWarning):
        S = normalize(A).toarray()
    assert not S[2].any() and not S[:, 2].any()


@given(st.integers(min_value=3, max_value=50), st.integers(min_value=0, max_value=2**31))
def test_connected_top_eigenvalue_is_one(n, seed):
    from conftest import random_connected_graph
    A = random_connected_graph(np.random.default_rng(seed), n)
    ev = np.linalg.eigvalsh(normalize(A).toarray())
    assert abs(ev.max() - 1.0) <= 1e-8
