"""Feature-file ingestion, train/test splitting, encodings, and metrics.

Two on-disk formats:

* CSV: header row, feature columns, optional final integer column named
  "label"; an optional leading "id" column carries per-sample identifiers.
  Reals are written with shortest round-trip formatting.
* FMX: little-endian binary. Magic "FMX1", u32 rows, u32 cols, rows*cols
  float64 values (row-major), u8 label-presence flag, then rows int32
  labels when present.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .errors import DimensionError, ParseError
from .linalg import as_matrix

FMX_MAGIC = b"FMX1"
FORMATS = ("csv", "fmx")


@dataclass(frozen=True)
class LabeledFeatures:
    """A feature matrix with optional integer class labels."""

    x: np.ndarray
    labels: np.ndarray | None
    classes: int
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        as_matrix(self.x, "x")
        if self.labels is not None:
            if len(self.labels) != self.x.shape[0]:
                raise DimensionError(
                    f"{len(self.labels)} labels for {self.x.shape[0]} rows"
                )
            if self.classes < 2:
                raise ValueError("labeled data needs at least 2 classes")
            if self.labels.min() < 0 or self.labels.max() >= self.classes:
                raise ValueError("labels must lie in [0, classes)")
        if self.ids is not None and len(self.ids) != self.x.shape[0]:
            raise DimensionError(f"{len(self.ids)} ids for {self.x.shape[0]} rows")

    @property
    def samples(self) -> int:
        return self.x.shape[0]

    @property
    def dims(self) -> int:
        return self.x.shape[1]

    def one_hot_labels(self) -> np.ndarray:
        if self.labels is None:
            raise ValueError("features are unlabeled")
        return one_hot(self.labels, self.classes)

    def subset(self, indices) -> "LabeledFeatures":
        idx = np.asarray(indices)
        return LabeledFeatures(
            x=self.x[idx],
            labels=None if self.labels is None else self.labels[idx],
            classes=self.classes,
            ids=None if self.ids is None else tuple(self.ids[i] for i in idx),
        )


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    test: np.ndarray
    seed: int


def split_8_2(n: int, seed: int) -> SplitIndices:
    """Seeded shuffle; the first ceil(0.8 n) indices train, the rest test."""
    if n < 5:
        raise ValueError(f"need at least 5 samples to split 8:2, got {n}")
    perm = rng.stream_rng(seed, rng.SPLIT, 0).permutation(n)
    k = -((-4 * n) // 5)  # ceil(0.8 n) in exact integer arithmetic
    return SplitIndices(train=perm[:k], test=perm[k:], seed=seed)


def one_hot(labels, classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise DimensionError("labels must be a nonempty 1-D vector")
    if classes < 2:
        raise ValueError("need at least 2 classes")
    if np.any(labels < 0) or np.any(labels >= classes):
        raise ValueError("labels must lie in [0, classes)")
    out = np.zeros((labels.size, classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def accuracy(pred, truth) -> float:
    """Fraction of exact matches."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise DimensionError("prediction and truth must be equal-length nonempty vectors")
    return float(np.mean(pred == truth))


def pearson(a, b) -> float:
    """Sample Pearson correlation; raises on constant input."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise DimensionError("need two equal-length vectors with at least 2 entries")
    da = a - a.mean()
    db = b - b.mean()
    na = np.linalg.norm(da)
    nb = np.linalg.norm(db)
    if na == 0.0 or nb == 0.0:
        raise ValueError("correlation is undefined for constant input")
    return float(np.clip(da @ db / (na * nb), -1.0, 1.0))


def _finish(x: np.ndarray, labels, ids, path) -> LabeledFeatures:
    if not np.isfinite(x).all():
        raise ValueError(f"{path}: feature matrix contains non-finite entries")
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        return LabeledFeatures(x=x, labels=labels, classes=int(labels.max()) + 1, ids=ids)
    return LabeledFeatures(x=x, labels=None, classes=0, ids=ids)


def _load_csv(path: Path) -> LabeledFeatures:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty file") from None
        if not header or any(not h.strip() for h in header):
            raise ParseError(f"{path}:1: malformed header")
        has_ids = header[0] == "id"
        has_labels = header[-1] == "label"
        first_feat = 1 if has_ids else 0
        last_feat = len(header) - 1 if has_labels else len(header)
        if last_feat - first_feat < 1:
            raise ParseError(f"{path}:1: no feature columns")

        rows, labels, ids = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row[first_feat:last_feat]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric feature value") from None
            if has_labels:
                try:
                    labels.append(int(row[-1]))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-integer label") from None
            if has_ids:
                ids.append(row[0])
        if not rows:
            raise ParseError(f"{path}:2: no data rows")
    x = np.asarray(rows, dtype=np.float64)
    return _finish(x, labels if has_labels else None, tuple(ids) if has_ids else None, path)


def _load_fmx(path: Path) -> LabeledFeatures:
    blob = path.read_bytes()
    if len(blob) < 13 or blob[:4] != FMX_MAGIC:
        raise ParseError(f"{path}: not an FMX file")
    rows, cols = struct.unpack_from("<II", blob, 4)
    need = 12 + rows * cols * 8 + 1
    if len(blob) < need:
        raise ParseError(f"{path}: truncated FMX payload")
    x = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=12).reshape(rows, cols)
    flag = blob[12 + rows * cols * 8]
    labels = None
    if flag == 1:
        off = need
        if len(blob) < off + rows * 4:
            raise ParseError(f"{path}: truncated FMX label block")
        labels = np.frombuffer(blob, dtype="<i4", count=rows, offset=off)
    elif flag != 0:
        raise ParseError(f"{path}: bad label-presence flag {flag}")
    return _finish(np.ascontiguousarray(x), labels, None, path)


def load_features(path, fmt: str) -> LabeledFeatures:
    """Load a feature file; labels are picked up when the file carries them."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"{path}: no such file")
    return _load_csv(path) if fmt == "csv" else _load_fmx(path)


def save_features(data: LabeledFeatures, path, fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = [f"f{i}" for i in range(data.dims)]
            if data.ids is not None:
                header = ["id"] + header
            if data.labels is not None:
                header = header + ["label"]
            writer.writerow(header)
            for i in range(data.samples):
                row = [repr(float(v)) for v in data.x[i]]
                if data.ids is not None:
                    row = [data.ids[i]] + row
                if data.labels is not None:
                    row = row + [str(int(data.labels[i]))]
                writer.writerow(row)
        return
    parts = [
        struct.pack("<4sII", FMX_MAGIC, data.samples, data.dims),
        np.ascontiguousarray(data.x, dtype="<f8").tobytes(),
        struct.pack("<B", 1 if data.labels is not None else 0),
    ]
    if data.labels is not None:
        parts.append(np.ascontiguousarray(data.labels, dtype="<i4").tobytes())
    path.write_bytes(b"".join(parts))
