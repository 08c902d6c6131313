"""Feature-file writers implementing the engine's on-disk interfaces.

FMX: magic "FMX1", u32 rows, u32 cols, rows*cols float64 little-endian
values row-major, u8 label-presence flag, then rows int32 labels if present.
CSV: header f0..fN with an optional leading "id" and trailing integer
"label" column; reals use shortest round-trip formatting.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

FMX_MAGIC = b"FMX1"


def write_fmx(path: Path, x: np.ndarray, labels: np.ndarray | None) -> None:
    rows, cols = x.shape
    parts = [
        struct.pack("<4sII", FMX_MAGIC, rows, cols),
        np.ascontiguousarray(x, dtype="<f8").tobytes(),
        struct.pack("<B", 1 if labels is not None else 0),
    ]
    if labels is not None:
        parts.append(np.ascontiguousarray(labels, dtype="<i4").tobytes())
    path.write_bytes(b"".join(parts))


def write_csv(path: Path, x: np.ndarray, labels: np.ndarray | None,
              ids: list[str] | None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{i}" for i in range(x.shape[1])]
        if ids is not None:
            header = ["id"] + header
        if labels is not None:
            header = header + ["label"]
        writer.writerow(header)
        for i in range(x.shape[0]):
            row = [repr(float(v)) for v in x[i]]
            if ids is not None:
                row = [ids[i]] + row
            if labels is not None:
                row = row + [str(int(labels[i]))]
            writer.writerow(row)
