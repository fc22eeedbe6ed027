"""Linear feature alignment and the alternating pseudo-label loop.

The alignment step stands in for learned domain-invariant features: source
features are whitened and re-colored to the target covariance (CORAL), then
each source class is translated onto the confidence-weighted mean of the
target rows pseudo-labeled with that class.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .anchors import MaskedClassWarning, a2lp
from .core import A2lpConfig, DimensionMismatch, FeatureSet, IterationRecord, RunDiagnostics, validate

DEFAULT_EPS = 1e-3


def _sym_power(C: np.ndarray, p: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(C)
    return (vecs * vals ** p) @ vecs.T


def _cov(X: np.ndarray, eps: float) -> np.ndarray:
    C = np.atleast_2d(np.cov(X, rowvar=False))
    return C + eps * np.eye(C.shape[0])


def coral_align(source, target, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Map ``source`` so its covariance matches ``target``'s; the source mean is kept.

    Both covariances get ``eps * I`` added before the whitening
    ``C_s^{-1/2}`` and re-coloring ``C_t^{1/2}``.
    """
    Xs = np.asarray(source, dtype=np.float64)
    Xt = np.asarray(target, dtype=np.float64)
    if Xs.ndim != 2 or Xt.ndim != 2 or Xs.shape[1] != Xt.shape[1]:
        raise DimensionMismatch(f"source {Xs.shape} and target {Xt.shape} must share a dimension")
    if len(Xs) < 2 or len(Xt) < 2:
        raise DimensionMismatch("covariances need at least two rows on each side")
    if not eps > 0:
        raise ValueError("eps must be positive")
    T = _sym_power(_cov(Xs, eps), -0.5) @ _sym_power(_cov(Xt, eps), 0.5)
    mu = Xs.mean(axis=0)
    return (Xs - mu) @ T + mu


def class_mean_shift(source, source_labels, target, pseudo, weights, K: int) -> np.ndarray:
    """Translate each source class onto the weighted mean of its pseudo-labeled target rows.

    Classes absent on either side (or with zero target weight) are left in
    place and reported with a :class:`MaskedClassWarning`.
    """
    Xs = np.asarray(source, dtype=np.float64)
    Xt = np.asarray(target, dtype=np.float64)
    ys = np.asarray(source_labels, dtype=np.int64)
    pt = np.asarray(pseudo, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    if Xs.shape[1] != Xt.shape[1]:
        raise DimensionMismatch(f"source dim {Xs.shape[1]} != target dim {Xt.shape[1]}")
    if len(ys) != len(Xs) or not (len(pt) == len(w) == len(Xt)):
        raise DimensionMismatch("labels and weights must align with their feature rows")
    out = Xs.copy()
    skipped = []
    for c in range(K):
        src = ys == c
        tgt = pt == c
        mass = w[tgt].sum()
        if not src.any() or mass <= 0:
            skipped.append(c)
            continue
        t_mean = (w[tgt, None] * Xt[tgt]).sum(axis=0) / mass
        out[src] += t_mean - Xs[src].mean(axis=0)
    if skipped:
        warnings.warn(f"class mean shift skipped classes {skipped}", MaskedClassWarning, stacklevel=2)
    return out


@dataclass
class AlternationResult:
    predictions: np.ndarray
    diagnostics: RunDiagnostics  # one record per outer round
    rounds: list[RunDiagnostics] = field(default_factory=list)
    features: FeatureSet | None = None  # features after the last alignment step

    def __iter__(self):
        yield self.predictions
        yield self.diagnostics


def alternate(dataset: FeatureSet, cfg: A2lpConfig, outer_rounds: int, ground_truth=None, *,
              align: bool = True, eps: float = DEFAULT_EPS,
              stop_when_stable: bool = False) -> AlternationResult:
    """Alternate A²LP pseudo-labeling with linear alignment of the labeled block.

    Each round runs :func:`a2lp` on the current features and then, if
    ``align``, moves the labeled rows by :func:`coral_align` followed by
    :func:`class_mean_shift` with that round's predictions and entropy
    weights. Unlabeled rows are never modified. ``stop_when_stable`` ends
    the loop once a round reproduces the previous round's predictions.
    """
    if outer_rounds < 1:
        raise ValueError("outer_rounds must be at least 1")
    validate(dataset, cfg)
    current = dataset
    L, U = dataset.labeled_slice, dataset.unlabeled_slice
    y_s = dataset.labels[L]
    summary = RunDiagnostics()
    rounds: list[RunDiagnostics] = []
    prev = None
    for r in range(outer_rounds):
        res = a2lp(current, cfg, ground_truth)
        rounds.append(res.diagnostics)
        last = res.diagnostics[-1]
        summary.records.append(IterationRecord(
            iter=r + 1, acc=last.acc, pow=last.pow, mean_weight=last.mean_weight,
            residual=last.residual,
            wall_ms=sum(rec.wall_ms for rec in res.diagnostics),
            n_nodes=last.n_nodes, warnings=[m for rec in res.diagnostics for m in rec.warnings]))
        pred = res.predictions
        stable = prev is not None and np.array_equal(pred, prev)
        prev = pred
        if stable and stop_when_stable:
            summary.stopped_early = r + 1 < outer_rounds
            break
        if align and r + 1 < outer_rounds:
            X = np.array(current.vectors)
            X_t = X[U]
            moved = coral_align(X[L], X_t, eps)
            X[L] = class_mean_shift(moved, y_s, X_t, pred, res.weights, dataset.n_classes)
            current = current.with_vectors(X)
    return AlternationResult(prev, summary, rounds, current)
