"""Shared domain types, configuration and validation.

Class labels are 0-based internally (``0..K-1``) with ``-1`` marking an
unlabeled row. The on-disk formats use ``1..K``; conversion happens in
:mod:`a2lp.data`.

Rows of a :class:`FeatureSet` are always ordered as labeled rows, then
unlabeled rows, then virtual anchor rows, so every module addresses the
three blocks by slice.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

UNLABELED = -1

Metric = Literal["cosine", "gaussian", "scalar3"]
SolverName = Literal["closed_form", "cg"]
GraphMethod = Literal["brute", "nn_descent"]

METRICS = ("cosine", "gaussian", "scalar3")
SOLVERS = ("closed_form", "cg")
GRAPH_METHODS = ("brute", "nn_descent")


class A2lpError(ValueError):
    """Base class for all errors raised by this package."""


class InvariantViolation(A2lpError):
    pass


class DimensionMismatch(A2lpError):
    pass


class AlphaOutOfRange(A2lpError):
    pass


class KOutOfRange(A2lpError):
    pass


class ConfigError(A2lpError):
    pass


class A2lpWarning(UserWarning):
    """Base class for recoverable conditions that are reported, not raised."""


class EmptyClassWarning(A2lpWarning):
    pass


def alpha_to_lambda(alpha: float) -> float:
    """Regularization weight lambda for which ``alpha = 2 lambda / (2 lambda + 1)``."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    return alpha / (2.0 * (1.0 - alpha))


def lambda_to_alpha(lam: float) -> float:
    if lam <= 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return 2.0 * lam / (2.0 * lam + 1.0)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Feature vectors with per-row label status.

    ``labels[i]`` is the class of a labeled or anchor row and ``-1`` for an
    unlabeled row. Anchor rows are whatever follows the first
    ``n_labeled + n_unlabeled`` rows.
    """

    vectors: np.ndarray
    labels: np.ndarray
    n_classes: int
    n_labeled: int
    n_unlabeled: int

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if vectors.ndim != 2:
            raise DimensionMismatch(f"vectors must be 2-d, got shape {vectors.shape}")
        if labels.shape != (vectors.shape[0],):
            raise DimensionMismatch(
                f"{labels.shape[0] if labels.ndim else 0} labels for {vectors.shape[0]} vectors"
            )
        if self.n_labeled < 0 or self.n_unlabeled < 0:
            raise InvariantViolation("block sizes must be non-negative")
        if self.n_labeled + self.n_unlabeled > vectors.shape[0]:
            raise DimensionMismatch("block sizes exceed the number of rows")
        object.__setattr__(self, "vectors", _readonly(vectors))
        object.__setattr__(self, "labels", _readonly(labels))

    @classmethod
    def from_blocks(cls, labeled: np.ndarray, labeled_classes, unlabeled: np.ndarray,
                    n_classes: int | None = None) -> "FeatureSet":
        labeled = np.atleast_2d(np.asarray(labeled, dtype=np.float64))
        unlabeled = np.asarray(unlabeled, dtype=np.float64).reshape(-1, labeled.shape[1])
        labeled_classes = np.asarray(labeled_classes, dtype=np.int64)
        if n_classes is None:
            n_classes = int(labeled_classes.max()) + 1 if labeled_classes.size else 0
        labels = np.concatenate([labeled_classes, np.full(len(unlabeled), UNLABELED)])
        return cls(np.vstack([labeled, unlabeled]), labels, n_classes,
                   len(labeled), len(unlabeled))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_anchors(self) -> int:
        return self.n - self.n_labeled - self.n_unlabeled

    @property
    def labeled_slice(self) -> slice:
        return slice(0, self.n_labeled)

    @property
    def unlabeled_slice(self) -> slice:
        return slice(self.n_labeled, self.n_labeled + self.n_unlabeled)

    @property
    def anchor_slice(self) -> slice:
        return slice(self.n_labeled + self.n_unlabeled, self.n)

    @property
    def supervised_mask(self) -> np.ndarray:
        """Rows carrying a label: labeled rows and anchors."""
        mask = np.ones(self.n, dtype=bool)
        mask[self.unlabeled_slice] = False
        return mask

    def label_matrix(self) -> np.ndarray:
        """n x K matrix with one-hot rows for labeled and anchor rows, zero rows otherwise."""
        Y = np.zeros((self.n, self.n_classes))
        rows = np.flatnonzero(self.labels >= 0)
        Y[rows, self.labels[rows]] = 1.0
        return Y

    def without_anchors(self) -> "FeatureSet":
        end = self.n_labeled + self.n_unlabeled
        return FeatureSet(self.vectors[:end], self.labels[:end], self.n_classes,
                          self.n_labeled, self.n_unlabeled)

    def with_vectors(self, vectors: np.ndarray) -> "FeatureSet":
        return dataclasses.replace(self, vectors=vectors)

    def equals(self, other: "FeatureSet") -> bool:
        return (self.n_classes == other.n_classes
                and self.n_labeled == other.n_labeled
                and self.n_unlabeled == other.n_unlabeled
                and np.array_equal(self.labels, other.labels)
                and self.vectors.shape == other.vectors.shape
                and self.vectors.tobytes() == other.vectors.tobytes())


@dataclass(frozen=True)
class NNDescentParams:
    sample_rate: float = 1.0
    max_iters: int = 10
    delta: float = 0.001
    max_candidates: int | None = None  # defaults to k
    n_trees: int = 6  # random-projection trees used for initialization; 0 = random init
    leaf_size: int | None = None  # defaults to 2k


@dataclass(frozen=True)
class A2lpConfig:
    k: int = 20
    alpha: float = 0.5
    metric: Metric = "cosine"
    solver: SolverName = "cg"
    cg_tol: float = 1e-6
    cg_max_iter: int = 1000
    anchor_iters: int = 10
    graph_method: GraphMethod = "brute"
    surrogate_source: bool = False
    seed: int = 0
    entropy_weighting: bool = True
    early_stop: bool = True
    nn_descent: NNDescentParams = field(default_factory=NNDescentParams)

    @property
    def lam(self) -> float:
        return alpha_to_lambda(self.alpha)


@dataclass
class IterationRecord:
    iter: int
    acc: float | None
    pow: float | None
    mean_weight: float
    residual: float
    wall_ms: float
    n_nodes: int = 0
    anchors: np.ndarray | None = None
    masked_classes: tuple[int, ...] = ()
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"iter": self.iter, "acc": self.acc, "pow": self.pow,
                "mean_weight": self.mean_weight, "residual": self.residual,
                "wall_ms": self.wall_ms}


@dataclass
class RunDiagnostics:
    records: list[IterationRecord] = field(default_factory=list)
    stopped_early: bool = False

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


def validate(dataset: FeatureSet, cfg: A2lpConfig) -> None:
    """Raise if ``dataset`` or ``cfg`` break an invariant; warn on classes without labels."""
    X = dataset.vectors
    if X.shape[1] < 1:
        raise DimensionMismatch("feature vectors must have at least one component")
    if not np.all(np.isfinite(X)):
        raise InvariantViolation("feature vectors must be finite")
    K = dataset.n_classes
    if K < 1:
        raise InvariantViolation(f"need at least one class, got K={K}")
    l, u = dataset.n_labeled, dataset.n_unlabeled
    if l < 1:
        raise InvariantViolation("need at least one labeled row (l >= 1)")
    if u < 1:
        raise InvariantViolation("need at least one unlabeled row (l < n)")
    labels = dataset.labels
    sup = labels[dataset.supervised_mask]
    if np.any(sup < 0) or np.any(sup >= K):
        raise InvariantViolation(f"labeled and anchor rows need classes in 0..{K - 1}")
    if np.any(labels[dataset.unlabeled_slice] != UNLABELED):
        raise InvariantViolation("unlabeled block must carry the unlabeled tag")
    if not 0.0 < cfg.alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {cfg.alpha}")
    if cfg.metric not in METRICS:
        raise ConfigError(f"unknown metric {cfg.metric!r}")
    if cfg.solver not in SOLVERS:
        raise ConfigError(f"unknown solver {cfg.solver!r}")
    if cfg.graph_method not in GRAPH_METHODS:
        raise ConfigError(f"unknown graph method {cfg.graph_method!r}")
    if cfg.k < 1 or (cfg.graph_method == "brute" and cfg.k > dataset.n - 1):
        raise KOutOfRange(f"k={cfg.k} outside 1..{dataset.n - 1}")
    if cfg.cg_tol <= 0 or cfg.cg_max_iter < 1 or cfg.anchor_iters < 1:
        raise ConfigError("cg_tol, cg_max_iter and anchor_iters must be positive")
    missing = np.setdiff1d(np.arange(K), labels[dataset.labeled_slice])
    if missing.size:
        warnings.warn(f"classes without labeled instances: {missing.tolist()}",
                      EmptyClassWarning, stacklevel=2)
