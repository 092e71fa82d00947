"""Writers for the EMB1/LBL1 binary formats.

Independent implementation of the wire format consumed by the analysis
engine; byte layout (little-endian u32 header fields, 16-byte header):

  EMB1: "EMB1" | version=1 | n_samples | n_dims | float32 LE row-major
  LBL1: "LBL1" | version=1 | n_samples | n_classes | u32 LE class ids

LBL1 may carry a ``<path>.names`` text sidecar, one class name per line.
"""

from __future__ import annotations

import struct

import numpy as np

FORMAT_VERSION = 1


def write_emb1(rows: np.ndarray, path) -> None:
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
        raise ValueError(f"embedding matrix must be at least 1x1, got {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("refusing to write non-finite embedding values")
    with open(path, "wb") as f:
        f.write(b"EMB1" + struct.pack("<III", FORMAT_VERSION, *rows.shape))
        f.write(rows.tobytes())


def write_lbl1(class_ids: np.ndarray, n_classes: int, path, names=None) -> None:
    ids = np.ascontiguousarray(class_ids, dtype="<u4")
    if ids.ndim != 1 or ids.size < 1:
        raise ValueError("class ids must be a non-empty 1-D array")
    if ids.max() >= n_classes:
        raise ValueError(f"class id {int(ids.max())} >= n_classes={n_classes}")
    with open(path, "wb") as f:
        f.write(b"LBL1" + struct.pack("<III", FORMAT_VERSION, ids.size, n_classes))
        f.write(ids.tobytes())
    if names is not None:
        if len(names) != n_classes:
            raise ValueError("names length must equal n_classes")
        with open(f"{path}.names", "w", encoding="utf-8") as f:
            f.write("\n".join(names) + "\n")
