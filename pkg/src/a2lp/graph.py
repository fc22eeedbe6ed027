"""k-nearest-neighbor affinity graphs and their normalization.

The raw graph stores ``A[i, j] = sim(v_i, v_j)`` exactly when ``v_i`` is one
of the ``k`` nearest neighbors of ``v_j`` (so column ``j`` holds the
neighbors of ``j``). "Nearest" means largest similarity for the chosen
metric; equal similarities are ordered by lower row index.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

from .core import A2lpError, A2lpWarning, FeatureSet, KOutOfRange, NNDescentParams
from .nndescent import KEY_NEG_DOT, KEY_SQEUCLIDEAN, _row_order, nn_descent


class ZeroVector(A2lpError):
    pass


class IsolatedNodeWarning(A2lpWarning):
    pass


def _check_metric(metric: str) -> None:
    if metric not in ("cosine", "gaussian", "scalar3"):
        raise ValueError(f"unknown similarity metric {metric!r}")


def _rescaled_rows(X: np.ndarray) -> np.ndarray:
    # Exact power-of-two rescaling so the largest entry of each row lies in
    # [0.5, 1); cosine is scale invariant and nothing can under- or overflow.
    peak = np.abs(X).max(axis=1)
    if np.any(peak == 0):
        raise ZeroVector(f"cosine similarity undefined for zero vector at row {int(np.argmin(peak))}")
    _, exp = np.frexp(peak)
    return np.ldexp(X, -exp[:, None])


def _unit_rows(X: np.ndarray) -> np.ndarray:
    Z = _rescaled_rows(X)
    return Z / np.linalg.norm(Z, axis=1)[:, None]


def edge_similarities(X: np.ndarray, rows: np.ndarray, cols: np.ndarray, metric: str) -> np.ndarray:
    """Similarity of each pair ``(X[rows[t]], X[cols[t]])``; always in ``[0, inf)``."""
    _check_metric(metric)
    X = np.asarray(X, dtype=np.float64)
    if metric == "cosine":
        Z = _rescaled_rows(X)
        sq = np.einsum("ij,ij->i", Z, Z)
        dots = np.einsum("ij,ij->i", Z[rows], Z[cols])
        # sqrt(|u|^2 |v|^2) keeps cos(u, u) exactly 1
        return np.clip(dots / np.sqrt(sq[rows] * sq[cols]), 0.0, 1.0)
    if metric == "gaussian":
        diff = X[rows] - X[cols]
        return np.exp(-0.5 * np.einsum("ij,ij->i", diff, diff))
    dots = np.einsum("ij,ij->i", X[rows], X[cols])
    return np.maximum(dots, 0.0) ** 3


def similarity(metric: str, u, v) -> float:
    """Non-negative similarity between two vectors.

    cosine: ``max(<u,v> / (|u||v|), 0)``; gaussian: ``exp(-|u-v|^2 / 2)``;
    scalar3: ``max(<u,v>, 0)^3``.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"vectors must be 1-d of equal length, got {u.shape} and {v.shape}")
    pair = np.vstack([u, v])
    return float(edge_similarities(pair, np.array([0]), np.array([1]), metric)[0])


def _search_space(X: np.ndarray, metric: str) -> tuple[np.ndarray, int]:
    if metric == "cosine":
        return _unit_rows(X), KEY_NEG_DOT
    if metric == "scalar3":
        return X, KEY_NEG_DOT
    return X, KEY_SQEUCLIDEAN


def knn_brute(X: np.ndarray, k: int, metric: str = "cosine", chunk_bytes: int = 2**26) -> np.ndarray:
    """Exact neighbor indices, shape ``(n, k)``, rows ordered nearest first."""
    _check_metric(metric)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise KOutOfRange(f"k={k} outside 1..{n - 1}")
    Z, kind = _search_space(X, metric)
    sq = np.einsum("ij,ij->i", Z, Z) if kind == KEY_SQEUCLIDEAN else None
    chunk = max(1, chunk_bytes // (8 * n))
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        m = stop - start
        if kind == KEY_SQEUCLIDEAN:
            keys = sq[start:stop, None] + sq[None, :] - 2.0 * (Z[start:stop] @ Z.T)
            np.maximum(keys, 0.0, out=keys)
        else:
            keys = -(Z[start:stop] @ Z.T)
        keys[np.arange(m), np.arange(start, stop)] = np.inf
        part = np.argpartition(keys, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(keys, part, axis=1).max(axis=1)
        # Rows where equal keys straddle the k-th position need the index tie-break.
        for r in np.flatnonzero((keys <= kth[:, None]).sum(axis=1) > k):
            cand = np.flatnonzero(keys[r] <= kth[r])
            part[r] = cand[np.lexsort((cand, keys[r, cand]))][:k]
        order = _row_order(np.take_along_axis(keys, part, axis=1), part)
        out[start:stop] = np.take_along_axis(part, order, axis=1)
    return out


def knn_indices(X: np.ndarray, k: int, metric: str = "cosine", method: str = "brute", *,
                seed: int = 0, params: NNDescentParams | None = None) -> np.ndarray:
    if method == "brute":
        return knn_brute(X, k, metric)
    if method != "nn_descent":
        raise ValueError(f"unknown graph method {method!r}")
    _check_metric(metric)
    X = np.asarray(X, dtype=np.float64)
    if not 1 <= k <= X.shape[0] - 1:
        raise KOutOfRange(f"k={k} outside 1..{X.shape[0] - 1}")
    p = params or NNDescentParams()
    Z, kind = _search_space(X, metric)
    idx, _, _ = nn_descent(Z, k, kind, seed=seed, n_trees=p.n_trees, leaf_size=p.leaf_size,
                           max_candidates=p.max_candidates, sample_rate=p.sample_rate,
                           max_iters=p.max_iters, delta=p.delta)
    return idx


def affinity_from_neighbors(X: np.ndarray, idx: np.ndarray, metric: str) -> sp.csr_matrix:
    n, k = idx.shape
    rows = idx.ravel()
    cols = np.repeat(np.arange(n), k)
    vals = edge_similarities(X, rows, cols, metric)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sort_indices()
    return A


def build_knn_affinity(features, k: int, metric: str = "cosine", method: str = "brute", *,
                       seed: int = 0, params: NNDescentParams | None = None) -> sp.csr_matrix:
    """Raw (unsymmetrized) k-NN affinity matrix with exactly ``k`` entries per column."""
    X = features.vectors if isinstance(features, FeatureSet) else np.asarray(features, dtype=np.float64)
    idx = knn_indices(X, k, metric, method, seed=seed, params=params)
    return affinity_from_neighbors(X, idx, metric)


def symmetrize(A: sp.spmatrix) -> sp.csr_matrix:
    """``A + A^T``."""
    A = sp.csr_matrix(A)
    S = (A + A.T).tocsr()
    S.sort_indices()
    return S


def degrees(A: sp.spmatrix) -> np.ndarray:
    return np.asarray(A.sum(axis=1)).ravel()


def normalize(A: sp.spmatrix) -> sp.csr_matrix:
    """``D^{-1/2} A D^{-1/2}``; isolated nodes get all-zero rows and columns."""
    A = sp.csr_matrix(A)
    d = degrees(A)
    isolated = d <= 0
    inv_sqrt = np.zeros_like(d)
    inv_sqrt[~isolated] = 1.0 / np.sqrt(d[~isolated])
    if isolated.any():
        warnings.warn(f"{int(isolated.sum())} isolated node(s) in affinity graph",
                      IsolatedNodeWarning, stacklevel=2)
    D = sp.diags(inv_sqrt)
    S = (D @ A @ D).tocsr()
    S.sort_indices()
    return S


def knn_recall(approx: np.ndarray, exact: np.ndarray) -> float:
    """Fraction of exact neighbor edges recovered by ``approx`` (both ``(n, k)`` index arrays)."""
    n, k = exact.shape
    hits = 0
    for a, e in zip(approx, exact):
        hits += np.intersect1d(a, e, assume_unique=True).size
    return hits / (n * k)
