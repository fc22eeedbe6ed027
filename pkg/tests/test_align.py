import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from a2lp.align import alternate, class_mean_shift, coral_align
from a2lp.anchors import MaskedClassWarning, a2lp
from a2lp.core import A2lpConfig, DimensionMismatch
from a2lp.data import benchmark


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_one_dimensional_scaling():
    rng = np.random.default_rng(0)
    src = rng.normal(scale=2.0, size=(200_000, 1))
    tgt = rng.normal(scale=1.0, size=(200_000, 1))
    vs, vt = src.var(ddof=1), tgt.var(ddof=1)
    eps = 1e-3
    scale = math.sqrt(vt + eps) / math.sqrt(vs + eps)  # -> sqrt(1+eps)/sqrt(4+eps)
    out = coral_align(src, tgt, eps)
    np.testing.assert_allclose(out - src.mean(), scale * (src - src.mean()), atol=1e-9)
    assert abs(scale - math.sqrt(1 + eps) / math.sqrt(4 + eps)) < 1e-2
    assert abs(out.var(ddof=1) - 1.0) < 1e-2


def test_same_sample_is_fixed_point(rng):
    X = rng.normal(size=(500, 4)) @ rng.normal(size=(4, 4))
    out = coral_align(X, X)
    np.testing.assert_allclose(out, X, atol=1e-9)


def test_equal_covariances_unchanged(rng):
    X = rng.normal(size=(300, 3))
    out = coral_align(X, X + 5.0)
    assert rel_fro(np.cov(out, rowvar=False), np.cov(X, rowvar=False)) < 1e-12


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_output_covariance_matches_target(seed, d):
    # Well-conditioned: eigenvalues of both covariances in [20, 40].
    r = np.random.default_rng(seed)

    def sample(n):
        Q, _ = np.linalg.qr(r.normal(size=(d, d)))
        L = Q * np.sqrt(r.uniform(20, 40, d))
        return r.normal(size=(n, d)) @ L.T

    src, tgt = sample(4000), sample(3000)
    out = coral_align(src, tgt)
    assert rel_fro(np.cov(out, rowvar=False), np.cov(tgt, rowvar=False)) <= 1e-4


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        coral_align(np.ones((3, 2)), np.ones((3, 3)))


def test_mean_shift_examples():
    X = np.array([[-1.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(class_mean_shift(X, [0, 0], X, [0, 0], [1, 1], 1), X)
    out = class_mean_shift(X, [0, 0], np.array([[1.0, 1.0]]), [0], [0.5], 1)
    np.testing.assert_array_equal(out, X + 1.0)


def test_mean_shift_skips_missing_class():
    X = np.array([[0.0], [5.0]])
    with pytest.warns(MaskedClassWarning):
        out = class_mean_shift(X, [0, 1], np.array([[1.0]]), [0], [1.0], 2)
    assert out.tolist() == [[1.0], [5.0]]


def test_true_labels_make_means_coincide():
    fs, truth = benchmark(7)
    Xs, Xt = fs.vectors[fs.labeled_slice], fs.vectors[fs.unlabeled_slice]
    ys = fs.labels[fs.labeled_slice]
    out = class_mean_shift(Xs, ys, Xt, truth, np.ones(len(Xt)), 12)
    gaps = [np.linalg.norm(out[ys == k].mean(0) - Xt[truth == k].mean(0)) for k in range(12)]
    assert max(gaps) <= 1e-10


def test_one_round_without_alignment_equals_a2lp():
    fs, truth = benchmark(7)
    cfg = A2lpConfig()
    alt = alternate(fs, cfg, 1, truth, align=False)
    ref = a2lp(fs, cfg, truth)
    assert alt.predictions.tobytes() == ref.predictions.tobytes()
    assert alt.diagnostics[0].acc == ref.diagnostics[-1].acc


def test_alignment_preserves_labels_and_order():
    fs, truth = benchmark(7)
    res = alternate(fs, A2lpConfig(), 2, truth)
    out = res.features
    np.testing.assert_array_equal(out.labels, fs.labels)
    np.testing.assert_array_equal(out.vectors[fs.unlabeled_slice], fs.vectors[fs.unlabeled_slice])
    assert (out.n_labeled, out.n_unlabeled) == (fs.n_labeled, fs.n_unlabeled)


def test_three_rounds_improve_shifted_benchmark():
    fs, truth = benchmark(7)
    res = alternate(fs, A2lpConfig(), 3, truth)
    accs = [r.acc for r in res.diagnostics]
    assert len(accs) == 3 and accs[-1] >= accs[0]
    assert all(0 <= r.pow <= 1 for r in res.diagnostics)


def test_zero_shift_stable_across_rounds():
    fs, truth = benchmark(7, shift=False)
    accs = [r.acc for r in alternate(fs, A2lpConfig(), 3, truth).diagnostics]
    assert max(accs) - min(accs) <= 0.01


def test_alternate_deterministic():
    fs, truth = benchmark(9, n_labeled_per_class=30, n_unlabeled_per_class=30)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = alternate(fs, A2lpConfig(k=10), 2, truth)
        b = alternate(fs, A2lpConfig(k=10), 2, truth)
    assert a.predictions.tobytes() == b.predictions.tobytes()
    assert a.features.equals(b.features)


def test_stop_when_stable():
    fs, truth = benchmark(7, shift=False)
    res = alternate(fs, A2lpConfig(), 6, truth, stop_when_stable=True)
    assert len(res.diagnostics) < 6 and res.diagnostics.stopped_early
