"""Synthetic domain-shift benchmarks and dataset file formats.

CSV layout: header ``id,label,f0,...,f{d-1}``; ``label`` is ``1..K`` for
labeled rows and ``-1`` for unlabeled rows. Values are written with 17
significant digits so float64 survives the round trip.

Binary layout (little-endian): magic ``A2LP``, u32 version (=1), u32 n,
u32 d, u32 K, n x i32 labels (``1..K`` or ``-1``), n*d x f32 features in
row-major order.

Random numbers come from numpy's PCG64 bit generator (``default_rng``).
"""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import UNLABELED, A2lpError, FeatureSet

MAGIC = b"A2LP"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class ParseError(A2lpError):
    pass


class LabelOutOfRange(A2lpError):
    pass


class BadMagic(A2lpError):
    pass


class TruncatedFile(A2lpError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int = 12
    n_labeled_per_class: int = 100
    n_unlabeled_per_class: int = 100
    dims: int = 32
    cluster_std: float = 1.0
    separation: float = 10.0  # circle radius of the class means, in units of cluster_std
    rotation: float = 0.0  # radians, about the centroid of the class means
    translation: float = 0.0  # distance moved along a seeded random direction
    seed: int = 7

    def __post_init__(self):
        if min(self.n_classes, self.n_labeled_per_class, self.n_unlabeled_per_class, self.dims) < 1:
            raise ValueError("class count, per-class counts and dims must be positive")
        if self.dims < 2:
            raise ValueError("the class means live in the first two dimensions; need dims >= 2")
        if not self.cluster_std > 0:
            raise ValueError("cluster_std must be positive")


def _class_means(spec: SyntheticSpec, direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K = spec.n_classes
    angles = 2.0 * np.pi * np.arange(K) / K
    radius = spec.separation * spec.cluster_std
    src = np.zeros((K, spec.dims))
    src[:, 0] = radius * np.cos(angles)
    src[:, 1] = radius * np.sin(angles)
    centroid = src.mean(axis=0)
    c, s = math.cos(spec.rotation), math.sin(spec.rotation)
    tgt = src - centroid
    tgt[:, :2] = tgt[:, :2] @ np.array([[c, s], [-s, c]])
    tgt += centroid + spec.translation * direction
    return src, tgt


def _shift_direction(rng: np.random.Generator, dims: int) -> np.ndarray:
    # In the plane of the class means, where a translation actually moves
    # target clusters towards the neighboring source classes.
    theta = rng.uniform(0.0, 2.0 * np.pi)
    direction = np.zeros(dims)
    direction[:2] = np.cos(theta), np.sin(theta)
    return direction


def class_means(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Source and target class means, each ``(K, d)``."""
    return _class_means(spec, _shift_direction(np.random.default_rng(spec.seed), spec.dims))


def generate_synthetic_uda(spec: SyntheticSpec) -> tuple[FeatureSet, np.ndarray]:
    """Labeled source clusters plus a shifted, unlabeled copy of them.

    Returns the feature set and the true classes of its unlabeled rows.
    With zero rotation and translation both blocks share one distribution.
    """
    rng = np.random.default_rng(spec.seed)
    src_means, tgt_means = _class_means(spec, _shift_direction(rng, spec.dims))
    K, d = spec.n_classes, spec.dims
    y_s = np.repeat(np.arange(K), spec.n_labeled_per_class)
    y_t = np.repeat(np.arange(K), spec.n_unlabeled_per_class)
    X_s = src_means[y_s] + spec.cluster_std * rng.normal(size=(y_s.size, d))
    X_t = tgt_means[y_t] + spec.cluster_std * rng.normal(size=(y_t.size, d))
    ps = rng.permutation(y_s.size)
    pt = rng.permutation(y_t.size)
    fs = FeatureSet.from_blocks(X_s[ps], y_s[ps], X_t[pt], K)
    return fs, y_t[pt]


def benchmark(seed: int = 7, *, shift: bool = True, **overrides) -> tuple[FeatureSet, np.ndarray]:
    """The standard desk-scale benchmark: K=12, d=32, translation 2 * cluster_std when shifted."""
    params = dict(n_classes=12, n_labeled_per_class=100, n_unlabeled_per_class=100, dims=32,
                  cluster_std=1.0, seed=seed)
    params.update(overrides)
    if shift:
        params.setdefault("translation", 2.0 * params["cluster_std"])
    return generate_synthetic_uda(SyntheticSpec(**params))


def _check_order(labels: np.ndarray, where: str) -> int:
    labeled = labels != UNLABELED
    l = int(labeled.sum())
    if not labeled[:l].all():
        raise ParseError(f"{where}: labeled rows must precede unlabeled rows")
    return l


def _from_file_labels(raw: np.ndarray, n_classes: int | None, where: str) -> tuple[np.ndarray, int]:
    bad = (raw != -1) & (raw < 1)
    if bad.any():
        raise LabelOutOfRange(f"{where}: label {int(raw[bad][0])} outside 1..K and not -1")
    K = int(raw.max()) if n_classes is None else n_classes
    if (raw > K).any():
        raise LabelOutOfRange(f"{where}: label {int(raw.max())} exceeds K={K}")
    labels = np.where(raw == -1, UNLABELED, raw - 1)
    return labels, K


def _to_file_labels(fs: FeatureSet) -> tuple[np.ndarray, FeatureSet]:
    base = fs.without_anchors()
    return np.where(base.labels == UNLABELED, -1, base.labels + 1), base


def write_csv(fs: FeatureSet, path) -> None:
    labels, base = _to_file_labels(fs)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["id", "label"] + [f"f{j}" for j in range(base.dim)]) + "\n")
        for i, (lab, row) in enumerate(zip(labels, base.vectors)):
            fh.write(f"{i},{lab}," + ",".join(format(x, ".17g") for x in row) + "\n")


def read_csv(path, n_classes: int | None = None) -> FeatureSet:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header[:2] != ["id", "label"] or len(header) < 3:
            raise ParseError(f"{path}:1: header must start with id,label and name feature columns")
        d = len(header) - 2
        labels, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != d + 2:
                raise ParseError(f"{path}:{lineno}: expected {d + 2} columns, got {len(rec)}")
            try:
                labels.append(int(rec[1]))
                rows.append([float(x) for x in rec[2:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    raw = np.array(labels, dtype=np.int64)
    lab, K = _from_file_labels(raw, n_classes, str(path))
    l = _check_order(lab, str(path))
    return FeatureSet(np.array(rows), lab, K, l, len(lab) - l)


def write_bin(fs: FeatureSet, path) -> None:
    labels, base = _to_file_labels(fs)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, base.n, base.dim, base.n_classes))
        fh.write(labels.astype("<i4").tobytes())
        fh.write(base.vectors.astype("<f4").tobytes())


def read_bin(path) -> FeatureSet:
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: not an A2LP binary file")
    if len(blob) < _HEADER.size:
        raise TruncatedFile(f"{path}: header truncated")
    _, version, n, d, K = _HEADER.unpack_from(blob)
    if version != VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    need = _HEADER.size + 4 * n + 4 * n * d
    if len(blob) < need:
        raise TruncatedFile(f"{path}: expected {need} bytes, found {len(blob)}")
    raw = np.frombuffer(blob, dtype="<i4", count=n, offset=_HEADER.size).astype(np.int64)
    X = np.frombuffer(blob, dtype="<f4", count=n * d, offset=_HEADER.size + 4 * n)
    lab, K = _from_file_labels(raw, K, str(path))
    l = _check_order(lab, str(path))
    return FeatureSet(X.reshape(n, d).astype(np.float64), lab, K, l, n - l)


def read_dataset(path, n_classes: int | None = None) -> FeatureSet:
    if str(path).endswith(".csv"):
        return read_csv(path, n_classes)
    return read_bin(path)


def write_dataset(fs: FeatureSet, path) -> None:
    if str(path).endswith(".csv"):
        write_csv(fs, path)
    else:
        write_bin(fs, path)


def truth_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".truth.csv")


def write_labels(labels, path, column: str = "label", offset: int = 0) -> None:
    """Two-column CSV ``id,<column>`` with ``id`` counted from ``offset`` and 1-based classes."""
    buf = io.StringIO()
    buf.write(f"id,{column}\n")
    for i, lab in enumerate(np.asarray(labels)):
        buf.write(f"{offset + i},{int(lab) + 1}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_labels(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_labels`: ``(ids, 0-based classes)``."""
    ids, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns")
            try:
                ids.append(int(rec[0]))
                labels.append(int(rec[1]) - 1)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    return np.array(ids, dtype=np.int64), np.array(labels, dtype=np.int64)
