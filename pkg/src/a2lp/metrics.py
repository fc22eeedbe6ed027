"""Accuracy, graph diagnostics and the connectivity oracle for ideal-cluster graphs."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .core import A2lpError
from .graph import degrees


class LengthMismatch(A2lpError):
    pass


class EmptyGraph(A2lpError):
    pass


class NotIdealCluster(A2lpError):
    pass


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.shape} predictions vs {truth.shape} labels")
    if pred.size == 0:
        raise LengthMismatch("accuracy of an empty set is undefined")
    return float(np.mean(pred == truth))


def _labeled_mask(labeled, n: int) -> np.ndarray:
    if isinstance(labeled, (int, np.integer)):
        mask = np.zeros(n, dtype=bool)
        mask[:labeled] = True
        return mask
    mask = np.asarray(labeled, dtype=bool)
    if mask.shape != (n,):
        raise LengthMismatch(f"labeled mask of shape {mask.shape} for {n} nodes")
    return mask


def percent_of_weight(A: sp.spmatrix, truth, labeled) -> float:
    """Share of total affinity on same-class labeled/unlabeled pairs (PoW).

    ``labeled`` is either the count ``l`` of leading labeled rows or a boolean
    mask (anchors count as labeled). Entries of the symmetric matrix are
    summed, so each undirected pair contributes in both orientations.
    """
    A = sp.coo_matrix(A)
    truth = np.asarray(truth)
    n = A.shape[0]
    if truth.shape != (n,):
        raise LengthMismatch(f"{truth.shape[0]} labels for {n} nodes")
    mask = _labeled_mask(labeled, n)
    total = A.data.sum()
    if total <= 0:
        raise EmptyGraph("graph has no positive weight")
    r, c = A.row, A.col
    lu = (mask[r] != mask[c]) & (truth[r] == truth[c])
    return float(A.data[lu].sum() / total)


def _scaled_rows(A, F):
    d = degrees(A)
    inv = np.zeros_like(d)
    inv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    return F * inv[:, None]


def smoothness_decomposition(A: sp.spmatrix, F: np.ndarray, truth) -> tuple[float, float]:
    """Split ``sum_ij a_ij |f_i/sqrt(d_i) - f_j/sqrt(d_j)|^2`` into same-class and cross-class parts."""
    A = sp.coo_matrix(A)
    truth = np.asarray(truth)
    G = _scaled_rows(A, np.asarray(F, dtype=np.float64))
    diff = G[A.row] - G[A.col]
    terms = A.data * np.einsum("ij,ij->i", diff, diff)
    same = truth[A.row] == truth[A.col]
    return float(terms[same].sum()), float(terms[~same].sum())


def lp_regularizer(A: sp.spmatrix, F: np.ndarray) -> float:
    """Graph smoothness term, via ``2 tr(G^T (D - A) G)`` with ``G = D^{-1/2} F``."""
    A = sp.csr_matrix(A)
    G = _scaled_rows(A, np.asarray(F, dtype=np.float64))
    L = sp.diags(degrees(A)) - A
    return float(2.0 * np.einsum("ij,ij->", G, L @ G))


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def check_ideal_cluster(A: sp.spmatrix, truth) -> None:
    A = sp.coo_matrix(A)
    truth = np.asarray(truth)
    bad = (A.data > 0) & (truth[A.row] != truth[A.col])
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        raise NotIdealCluster(f"cross-class edge ({A.row[t]}, {A.col[t]}) has positive weight")


def reachable_from_labeled(A: sp.spmatrix, labeled) -> np.ndarray:
    """Boolean mask of nodes sharing a positive-weight component with a labeled node."""
    A = sp.coo_matrix(A)
    n = A.shape[0]
    mask = _labeled_mask(labeled, n)
    uf = UnionFind(n)
    for i, j, w in zip(A.row.tolist(), A.col.tolist(), A.data.tolist()):
        if w > 0:
            uf.union(i, j)
    seeded = {uf.find(i) for i in np.flatnonzero(mask).tolist()}
    return np.array([uf.find(i) in seeded for i in range(n)], dtype=bool)


def connectivity_oracle(A: sp.spmatrix, truth, labeled) -> float:
    """Accuracy that label propagation must reach on an ideal-cluster graph.

    Fraction of unlabeled nodes joined to at least one labeled node by a
    path of positive-weight edges.
    """
    check_ideal_cluster(A, truth)
    n = A.shape[0]
    mask = _labeled_mask(labeled, n)
    reach = reachable_from_labeled(A, mask)
    unl = ~mask
    if not unl.any():
        raise LengthMismatch("no unlabeled nodes")
    return float(reach[unl].mean())
