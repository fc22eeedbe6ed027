import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components

from a2lp.metrics import (EmptyGraph, LengthMismatch, NotIdealCluster, UnionFind, accuracy,
                          connectivity_oracle, lp_regularizer, percent_of_weight,
                          smoothness_decomposition)


def sym(n, edges):
    r, c, w = zip(*edges)
    A = sp.coo_matrix((w, (r, c)), shape=(n, n)).tocsr()
    return (A + A.T).tocsr()


def test_accuracy_examples():
    assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert accuracy([0, 0], [1, 1]) == 0.0
    assert accuracy([0, 1, 1, 1], [0, 1, 1, 0]) == 0.75
    with pytest.raises(LengthMismatch):
        accuracy([0], [0, 1])


def test_pow_examples():
    truth = np.array([0, 0, 0])
    assert percent_of_weight(sym(3, [(0, 1, 1.0)]), truth, 1) == 1.0
    assert percent_of_weight(sym(3, [(1, 2, 1.0)]), truth, 1) == 0.0
    # one same-class L-U edge and one U-U edge, both weight 1
    A = sym(3, [(0, 1, 1.0), (1, 2, 1.0)])
    oracle = (1.0 + 1.0) / (4 * 1.0)
    assert abs(percent_of_weight(A, truth, 1) - oracle) <= 1e-9
    assert oracle == 0.5


def test_pow_mask_and_empty():
    A = sym(3, [(0, 2, 2.0), (1, 2, 2.0)])
    assert percent_of_weight(A, [0, 1, 1], np.array([False, False, True])) == 0.5
    with pytest.raises(EmptyGraph):
        percent_of_weight(sp.csr_matrix((3, 3)), [0, 0, 0], 1)


@given(st.integers(0, 2**31), st.floats(min_value=1e-3, max_value=1e3))
def test_pow_scale_invariant(seed, c):
    r = np.random.default_rng(seed)
    A = sp.random(20, 20, density=0.3, random_state=r)
    A = (A + A.T).tocsr()
    truth = r.integers(0, 3, 20)
    if A.sum() == 0:
        return
    assert percent_of_weight(c * A, truth, 5) == pytest.approx(percent_of_weight(A, truth, 5),
                                                               rel=1e-12)


def test_smoothness_single_cross_edge():
    A = sym(2, [(0, 1, 1.0)])
    F = np.eye(2)
    # both orientations of |e_a - e_b|^2 = 2
    oracle = 2 * float(np.sum((F[0] - F[1]) ** 2))
    same, cross = smoothness_decomposition(A, F, [0, 1])
    assert same == 0.0
    assert abs(cross - oracle) <= 1e-9 and oracle == 4.0


def test_smoothness_trivial_cases():
    A = sym(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    assert smoothness_decomposition(A, np.ones((3, 2)), [0, 1, 0]) == (0.0, 0.0)
    assert smoothness_decomposition(sp.csr_matrix((3, 3)), np.ones((3, 2)), [0, 1, 0]) == (0.0, 0.0)


@given(st.integers(0, 2**31))
def test_smoothness_sums_to_regularizer(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 30))
    A = sp.random(n, n, density=0.4, random_state=r)
    A = (A + A.T).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    F = r.uniform(size=(n, 3))
    same, cross = smoothness_decomposition(A, F, r.integers(0, 3, n))
    R = lp_regularizer(A, F)
    assert same >= 0 and cross >= 0
    assert abs(same + cross - R) <= 1e-8 * max(1.0, abs(R))


def test_union_find():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4) and not uf.union(1, 0)
    assert uf.find(0) == uf.find(1) != uf.find(3)


def test_oracle_examples():
    truth = np.array([0, 0, 1, 1, 1])
    A = sym(5, [(0, 1, 1.0), (2, 3, 1.0)])
    # node 1 reaches labeled 0; node 3 reaches labeled 2; node 4 is alone
    assert connectivity_oracle(A, truth, np.array([True, False, True, False, False])) == 2 / 3
    full = sym(5, [(0, 1, 1.0), (2, 3, 1.0), (3, 4, 0.5)])
    assert connectivity_oracle(full, truth, np.array([True, False, True, False, False])) == 1.0
    with pytest.raises(NotIdealCluster):
        connectivity_oracle(sym(5, [(1, 2, 1.0)]), truth, 1)


def _scipy_oracle(A, labeled):
    _, comp = connected_components(A, directed=False)
    seeded = set(comp[labeled])
    unl = ~labeled
    return np.mean([comp[i] in seeded for i in np.flatnonzero(unl)])


def test_oracle_strictly_increases_on_new_bridge():
    truth = np.array([0, 0, 0, 0])
    labeled = np.array([True, False, False, False])
    A = sym(4, [(0, 1, 1.0), (2, 3, 1.0)])
    before = connectivity_oracle(A, truth, labeled)
    B = sym(4, [(0, 1, 1.0), (2, 3, 1.0), (0, 2, 0.3)])
    after = connectivity_oracle(B, truth, labeled)
    assert before == _scipy_oracle(A, labeled) == 1 / 3
    assert after == _scipy_oracle(B, labeled) == 1.0
    assert after > before


@given(st.integers(0, 2**31))
def test_oracle_matches_scipy_components(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(4, 60))
    truth = r.integers(0, 3, n)
    A = sp.random(n, n, density=0.08, random_state=r).tocsr()
    A = A.multiply(truth[:, None] == truth[None, :]).tocsr()
    A = (A + A.T).tocsr()
    labeled = r.random(n) < 0.3
    labeled[0], labeled[-1] = True, False
    assert connectivity_oracle(A, truth, labeled) == pytest.approx(_scipy_oracle(A, labeled))
