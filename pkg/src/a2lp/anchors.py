"""Label propagation with augmented anchors.

Each iteration rebuilds the k-NN graph over the current feature set, solves
the propagation system, turns the unlabeled block's predictions into
entropy-weighted class centers ("anchors") and appends them as labeled rows.
Anchors accumulate across iterations and are dropped when the loop ends.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (UNLABELED, A2lpConfig, FeatureSet, IterationRecord, RunDiagnostics,
                   A2lpError, A2lpWarning, validate)
from .graph import build_knn_affinity, normalize, symmetrize
from .metrics import accuracy, percent_of_weight
from .solver import SolverReport, argmax_labels, solve, to_probabilities

log = logging.getLogger(__name__)


class KTooSmall(A2lpError):
    pass


class MaskedClassWarning(A2lpWarning):
    pass


@dataclass(frozen=True)
class AnchorSet:
    vectors: np.ndarray  # (K, d); rows of masked classes are NaN
    present: np.ndarray  # (K,) bool

    @property
    def classes(self) -> np.ndarray:
        return np.flatnonzero(self.present)

    @property
    def masked(self) -> np.ndarray:
        return np.flatnonzero(~self.present)


def entropy_weights(P: np.ndarray, K: int | None = None) -> np.ndarray:
    """Confidence ``1 - H(p) / log K`` of each probability row (natural log, 0 log 0 = 0)."""
    P = np.asarray(P, dtype=np.float64)
    K = P.shape[1] if K is None else K
    if K < 2:
        raise KTooSmall("entropy weights need at least two classes")
    logs = np.log(P, out=np.zeros_like(P), where=P > 0)
    H = -np.einsum("ij,ij->i", P, logs)
    return np.clip(1.0 - H / np.log(K), 0.0, 1.0)


def compute_anchors(features_u: np.ndarray, pseudo, weights, K: int) -> AnchorSet:
    """Weighted mean of the unlabeled features assigned to each class."""
    X = np.asarray(features_u, dtype=np.float64)
    pseudo = np.asarray(pseudo, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    if not (len(X) == len(pseudo) == len(w)):
        raise ValueError("features, pseudo labels and weights must be aligned")
    mass = np.bincount(pseudo, weights=w, minlength=K)[:K]
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, pseudo, w[:, None] * X)
    present = mass > 0
    vectors = np.full_like(sums, np.nan)
    vectors[present] = sums[present] / mass[present, None]
    return AnchorSet(vectors, present)


def augment(features: FeatureSet, Y: np.ndarray | None, anchors: AnchorSet):
    """Append one labeled row per present anchor class; returns ``(features, Y)``."""
    classes = anchors.classes
    if classes.size == 0:
        return features, Y
    vectors = np.vstack([features.vectors, anchors.vectors[classes]])
    labels = np.concatenate([features.labels, classes])
    out = FeatureSet(vectors, labels, features.n_classes, features.n_labeled, features.n_unlabeled)
    if Y is not None:
        Y = np.vstack([Y, np.eye(features.n_classes)[classes]])
    return out, Y


def surrogate_source(features: FeatureSet) -> FeatureSet:
    """Replace the labeled rows with one mean vector per class present among them."""
    K = features.n_classes
    X_l = features.vectors[features.labeled_slice]
    y_l = features.labels[features.labeled_slice]
    counts = np.bincount(y_l, minlength=K)
    classes = np.flatnonzero(counts)
    if classes.size < K:
        warnings.warn(f"classes {np.flatnonzero(counts == 0).tolist()} have no labeled rows "
                      "and get no surrogate", MaskedClassWarning, stacklevel=2)
    sums = np.zeros((K, features.dim))
    np.add.at(sums, y_l, X_l)
    centers = sums[classes] / counts[classes, None]
    unl = features.vectors[features.unlabeled_slice]
    return FeatureSet.from_blocks(centers, classes, unl, K)


def inject_label_noise(pseudo, level: float, K: int, seed: int) -> np.ndarray:
    """Give ``floor(level * n)`` randomly chosen labels a uniformly drawn different class."""
    if K < 2:
        raise KTooSmall("label noise needs at least two classes")
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"noise level must be in [0, 1], got {level}")
    labels = np.array(pseudo, dtype=np.int64, copy=True)
    rng = np.random.default_rng(seed)
    m = int(np.floor(level * labels.size))
    chosen = rng.choice(labels.size, size=m, replace=False)
    labels[chosen] = (labels[chosen] + rng.integers(1, K, size=m)) % K
    return labels


@dataclass
class PropagationResult:
    scores: np.ndarray  # F for every row
    report: SolverReport
    affinity: sp.csr_matrix  # symmetric A


def propagate(features: FeatureSet, cfg: A2lpConfig) -> PropagationResult:
    """Build the graph over ``features`` and solve the propagation system once."""
    A = symmetrize(build_knn_affinity(features.vectors, cfg.k, cfg.metric, cfg.graph_method,
                                      seed=cfg.seed, params=cfg.nn_descent))
    S = normalize(A)
    F, report = solve(S, features.label_matrix(), cfg.alpha, cfg.solver, cfg.cg_tol, cfg.cg_max_iter)
    return PropagationResult(F, report, A)


def label_propagation(dataset: FeatureSet, cfg: A2lpConfig) -> np.ndarray:
    """Plain LP predictions for the unlabeled block."""
    validate(dataset, cfg)
    res = propagate(dataset, cfg)
    return argmax_labels(res.scores[dataset.unlabeled_slice])


@dataclass
class A2lpResult:
    predictions: np.ndarray
    diagnostics: RunDiagnostics
    probabilities: np.ndarray  # unlabeled block of the final solve
    weights: np.ndarray

    def __iter__(self):
        yield self.predictions
        yield self.diagnostics


def a2lp(dataset: FeatureSet, cfg: A2lpConfig, ground_truth=None, *,
         initial_pseudo=None) -> A2lpResult:
    """Run label propagation with augmented anchors for ``cfg.anchor_iters`` iterations.

    ``ground_truth`` (labels of the unlabeled block) only feeds diagnostics.
    ``initial_pseudo`` replaces the first iteration's predicted labels when
    forming anchors, as in the label-noise robustness experiment.
    """
    validate(dataset, cfg)
    work = surrogate_source(dataset) if cfg.surrogate_source else dataset
    K = work.n_classes
    unl = work.unlabeled_slice
    X_u = work.vectors[unl]
    truth_u = None if ground_truth is None else np.asarray(ground_truth, dtype=np.int64)
    if truth_u is not None and truth_u.shape != (work.n_unlabeled,):
        raise ValueError(f"ground truth has {truth_u.size} labels for {work.n_unlabeled} unlabeled rows")

    diag = RunDiagnostics()
    current = work
    prev_pred = None
    for it in range(cfg.anchor_iters):
        t0 = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = propagate(current, cfg)
            P = to_probabilities(res.scores[unl])
            pred = argmax_labels(P)
            w = entropy_weights(P, K) if cfg.entropy_weighting else np.ones(len(P))
            pseudo = pred if (it > 0 or initial_pseudo is None) else np.asarray(initial_pseudo)
            anchors = compute_anchors(X_u, pseudo, w, K)
            if anchors.masked.size:
                warnings.warn(f"no anchor for classes {anchors.masked.tolist()}", MaskedClassWarning)
        for c in caught:
            warnings.warn_explicit(c.message, c.category, c.filename, c.lineno)

        acc = pw = None
        if truth_u is not None:
            acc = accuracy(pred, truth_u)
            truth_all = current.labels.copy()
            truth_all[unl] = truth_u
            pw = percent_of_weight(res.affinity, truth_all, current.supervised_mask)
        diag.records.append(IterationRecord(
            iter=it + 1, acc=acc, pow=pw, mean_weight=float(w.mean()),
            residual=res.report.residual, wall_ms=1e3 * (time.perf_counter() - t0),
            n_nodes=current.n, anchors=anchors.vectors,
            masked_classes=tuple(anchors.masked.tolist()),
            warnings=[str(c.message) for c in caught]))
        log.debug("iter %d: nodes=%d acc=%s pow=%s", it + 1, current.n, acc, pw)

        final = (pred, P, w)
        if cfg.early_stop and prev_pred is not None and np.array_equal(pred, prev_pred):
            diag.stopped_early = it + 1 < cfg.anchor_iters
            break
        prev_pred = pred
        current, _ = augment(current, None, anchors)

    pred, P, w = final
    return A2lpResult(pred, diag, P, w)
