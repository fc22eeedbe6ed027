"""Approximate k-nearest-neighbor search by nearest-neighbor descent.

Each node keeps a bounded max-heap of its current best neighbors keyed on
``(key, index)``, so ties are resolved towards the lower index exactly as in
the brute-force search. The heap is seeded from a small forest of random
projection trees and refined by local joins over sampled new/old candidate
lists until fewer than ``delta * n * k`` heap updates happen in a sweep.

Keys are "smaller is closer": squared Euclidean distance or negated inner
product (callers normalize rows first for cosine similarity).
"""
from __future__ import annotations

import numpy as np
from numba import njit

KEY_SQEUCLIDEAN = 0
KEY_NEG_DOT = 1


@njit(cache=True, fastmath=True, inline="always")
def _key(X, a, b, kind):
    s = 0.0
    if kind == KEY_SQEUCLIDEAN:
        for t in range(X.shape[1]):
            diff = X[a, t] - X[b, t]
            s += diff * diff
        return s
    for t in range(X.shape[1]):
        s += X[a, t] * X[b, t]
    return -s


@njit(cache=True, inline="always")
def _heap_push(thr, dist, idx, flag, i, d, j):
    # Root holds the worst (key, index) pair; reject anything not strictly better.
    if d > thr[i] or (d == thr[i] and j >= idx[i, 0]):
        return 0
    k = dist.shape[1]
    for t in range(k):
        if idx[i, t] == j:
            return 0
    pos = 0
    while True:
        c1 = 2 * pos + 1
        c2 = c1 + 1
        if c1 >= k:
            break
        sw = c1
        if c2 < k and (dist[i, c2] > dist[i, c1]
                       or (dist[i, c2] == dist[i, c1] and idx[i, c2] > idx[i, c1])):
            sw = c2
        if dist[i, sw] > d or (dist[i, sw] == d and idx[i, sw] > j):
            dist[i, pos] = dist[i, sw]
            idx[i, pos] = idx[i, sw]
            flag[i, pos] = flag[i, sw]
            pos = sw
        else:
            break
    dist[i, pos] = d
    idx[i, pos] = j
    flag[i, pos] = 1
    thr[i] = dist[i, 0]
    return 1


@njit(cache=True, inline="always")
def _candidate_push(pri, cand, i, p, j):
    m = cand.shape[1]
    if p >= pri[i, 0]:
        return
    for t in range(m):
        if cand[i, t] == j:
            return
    pos = 0
    while True:
        c1 = 2 * pos + 1
        c2 = c1 + 1
        if c1 >= m:
            break
        sw = c1
        if c2 < m and pri[i, c2] > pri[i, c1]:
            sw = c2
        if pri[i, sw] > p:
            pri[i, pos] = pri[i, sw]
            cand[i, pos] = cand[i, sw]
            pos = sw
        else:
            break
    pri[i, pos] = p
    cand[i, pos] = j


@njit(cache=True)
def _rp_tree_leaves(X, leaf_size, order, bounds):
    """Split rows recursively by random hyperplanes; fill ``order``/``bounds``, return leaf count."""
    n = X.shape[0]
    d = X.shape[1]
    for t in range(n):
        order[t] = t
    stack_lo = np.empty(n + 1, np.int64)
    stack_hi = np.empty(n + 1, np.int64)
    stack_lo[0] = 0
    stack_hi[0] = n
    sp = 1
    n_leaves = 0
    side = np.empty(n, np.bool_)
    normal = np.empty(d)
    while sp > 0:
        sp -= 1
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        m = hi - lo
        if m <= leaf_size:
            bounds[n_leaves, 0] = lo
            bounds[n_leaves, 1] = hi
            n_leaves += 1
            continue
        a = order[lo + np.random.randint(m)]
        b = order[lo + np.random.randint(m)]
        offset = 0.0
        for c in range(d):
            normal[c] = X[a, c] - X[b, c]
            offset += normal[c] * 0.5 * (X[a, c] + X[b, c])
        n_right = 0
        for t in range(lo, hi):
            i = order[t]
            s = -offset
            for c in range(d):
                s += normal[c] * X[i, c]
            if s == 0.0:
                side[t] = np.random.random() < 0.5
            else:
                side[t] = s > 0.0
            if side[t]:
                n_right += 1
        if n_right == 0 or n_right == m:
            for t in range(lo, hi):
                side[t] = np.random.random() < 0.5
        i0 = lo
        j0 = hi - 1
        while i0 <= j0:
            if side[i0]:
                i0 += 1
            else:
                tmp = order[i0]
                order[i0] = order[j0]
                order[j0] = tmp
                sv = side[i0]
                side[i0] = side[j0]
                side[j0] = sv
                j0 -= 1
        if i0 == lo or i0 == hi:
            i0 = lo + m // 2
        stack_lo[sp] = lo
        stack_hi[sp] = i0
        sp += 1
        stack_lo[sp] = i0
        stack_hi[sp] = hi
        sp += 1
    return n_leaves


@njit(cache=True)
def _nn_descent(X, k, kind, seed, n_trees, leaf_size, max_candidates, sample_rate,
                max_iters, delta):
    np.random.seed(seed)
    n = X.shape[0]
    dist = np.full((n, k), np.inf)
    thr = np.full(n, np.inf)
    idx = np.full((n, k), -1, dtype=np.int64)
    flag = np.zeros((n, k), dtype=np.uint8)

    order = np.empty(n, np.int64)
    bounds = np.empty((n, 2), np.int64)
    for _ in range(n_trees):
        n_leaves = _rp_tree_leaves(X, leaf_size, order, bounds)
        for leaf in range(n_leaves):
            lo = bounds[leaf, 0]
            hi = bounds[leaf, 1]
            for a in range(lo, hi):
                p = order[a]
                for b in range(a + 1, hi):
                    q = order[b]
                    d = _key(X, p, q, kind)
                    _heap_push(thr, dist, idx, flag, p, d, q)
                    _heap_push(thr, dist, idx, flag, q, d, p)
    for i in range(n):
        filled = 0
        for t in range(k):
            if idx[i, t] >= 0:
                filled += 1
        while filled < k:
            j = np.random.randint(n)
            if j != i:
                filled += _heap_push(thr, dist, idx, flag, i, _key(X, i, j, kind), j)

    n_sweeps = 0
    for _ in range(max_iters):
        n_sweeps += 1
        new_pri = np.full((n, max_candidates), np.inf)
        new_cand = np.full((n, max_candidates), -1, dtype=np.int64)
        old_pri = np.full((n, max_candidates), np.inf)
        old_cand = np.full((n, max_candidates), -1, dtype=np.int64)
        for i in range(n):
            for t in range(k):
                j = idx[i, t]
                p = np.random.random()
                if flag[i, t]:
                    if p < sample_rate:
                        _candidate_push(new_pri, new_cand, i, p, j)
                        _candidate_push(new_pri, new_cand, j, p, i)
                else:
                    _candidate_push(old_pri, old_cand, i, p, j)
                    _candidate_push(old_pri, old_cand, j, p, i)
        for i in range(n):
            for t in range(k):
                if flag[i, t]:
                    j = idx[i, t]
                    for s in range(max_candidates):
                        if new_cand[i, s] == j:
                            flag[i, t] = 0
                            break
        updates = 0
        for i in range(n):
            for a in range(max_candidates):
                p = new_cand[i, a]
                if p < 0:
                    continue
                for b in range(a + 1, max_candidates):
                    q = new_cand[i, b]
                    if q < 0:
                        continue
                    d = _key(X, p, q, kind)
                    if d <= thr[p] or d <= thr[q]:
                        updates += _heap_push(thr, dist, idx, flag, p, d, q)
                        updates += _heap_push(thr, dist, idx, flag, q, d, p)
                for b in range(max_candidates):
                    q = old_cand[i, b]
                    if q < 0 or q == p:
                        continue
                    d = _key(X, p, q, kind)
                    if d <= thr[p] or d <= thr[q]:
                        updates += _heap_push(thr, dist, idx, flag, p, d, q)
                        updates += _heap_push(thr, dist, idx, flag, q, d, p)
        if updates <= delta * n * k:
            break
    return idx, dist, n_sweeps


def nn_descent(X: np.ndarray, k: int, kind: int = KEY_SQEUCLIDEAN, *, seed: int = 0,
               n_trees: int = 6, leaf_size: int | None = None,
               max_candidates: int | None = None, sample_rate: float = 1.0,
               max_iters: int = 10, delta: float = 0.001):
    """Approximate ``k`` nearest neighbors of every row of ``X`` (excluding itself).

    Returns ``(indices, keys, sweeps)`` with each row sorted by ``(key, index)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} outside 1..{n - 1}")
    leaf_size = max(2 * k, 8) if leaf_size is None else leaf_size
    max_candidates = k if max_candidates is None else max_candidates
    idx, dist, sweeps = _nn_descent(X, k, kind, np.uint32(seed % 2**32), n_trees,
                                    leaf_size, max_candidates, sample_rate, max_iters, delta)
    order = _row_order(dist, idx)
    return (np.take_along_axis(idx, order, axis=1),
            np.take_along_axis(dist, order, axis=1), sweeps)


def _row_order(keys: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # lexsort is not vectorized over rows; a stable two-pass argsort is.
    order = np.argsort(idx, axis=1, kind="stable")
    by_key = np.argsort(np.take_along_axis(keys, order, axis=1), axis=1, kind="stable")
    return np.take_along_axis(order, by_key, axis=1)
