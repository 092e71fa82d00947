"""Dataset types and the on-disk formats shared by every pipeline stage.

Binary layouts (all integers little-endian u32, header exactly 16 bytes):

  EMB1 file: magic ``EMB1`` | version=1 | n_samples | n_dims,
             then n_samples*n_dims float32 LE, row-major.
  LBL1 file: magic ``LBL1`` | version=1 | n_samples | n_classes,
             then n_samples u32 LE class ids. An optional sidecar
             ``<path>.names`` holds one class name per line (line i
             names class id i).

Keep-lists are small and meant to be human-diffable, so they are stored
as a ``key = value`` text document with the index array space-separated
on one line.

Embeddings are stored float32 (matching upstream embedding models); all
downstream accumulation happens in float64. Every type here is immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace

import numpy as np

EMB_MAGIC = b"EMB1"
LBL_MAGIC = b"LBL1"
FORMAT_VERSION = 1
HEADER_SIZE = 16

KEEP_METHODS = frozenset({"simple", "hard", "random", "subsample", "identity"})
PRUNE_SCOPES = frozenset({"global", "per_cluster"})

# Methods whose keep-list cardinality is pinned to round((1-f)*n).
_SIZED_METHODS = frozenset({"simple", "hard", "random"})


class FormatError(ValueError):
    """A file does not conform to its declared on-disk format."""


class ContractError(ValueError):
    """An operation was invoked with arguments violating its contract."""


def round_half_even(x: float) -> int:
    """Round to nearest integer, ties to even (fixes cardinalities exactly)."""
    return int(round(x))


def bytes_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_digest(path) -> str:
    """SHA-256 hex digest of a file's bytes (experiment provenance)."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EmbeddingMatrix:
    """N x D row-major float32 matrix of per-sample embeddings."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, np.float32)
        if arr.ndim != 2:
            raise ContractError(f"embedding matrix must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractError(f"embedding matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ContractError(f"non-finite value at flat index {bad}")
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]

    def as_float64(self) -> np.ndarray:
        """Float64 view for numeric work; accumulation never runs in float32."""
        return self.values.astype(np.float64)


@dataclass(frozen=True)
class LabelVector:
    """Per-sample integer class ids in [0, n_classes)."""

    class_ids: np.ndarray
    n_classes: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        ids = _frozen_array(self.class_ids, np.uint32)
        if ids.ndim != 1 or ids.size < 1:
            raise ContractError("label vector must be a non-empty 1-D array")
        if self.n_classes < 1:
            raise ContractError(f"n_classes must be >= 1, got {self.n_classes}")
        if ids.max() >= self.n_classes:
            bad = int(np.flatnonzero(ids >= self.n_classes)[0])
            raise ContractError(
                f"class id {int(ids[bad])} at row {bad} >= n_classes={self.n_classes}"
            )
        if self.class_names is not None and len(self.class_names) != self.n_classes:
            raise ContractError("class_names length must equal n_classes")
        object.__setattr__(self, "class_ids", ids)

    @property
    def n_samples(self) -> int:
        return self.class_ids.size


@dataclass(frozen=True)
class KeepList:
    """Sorted retained sample indices plus provenance of the pruning decision.

    ``fraction_removed`` follows the "fraction removed" convention: 0.4 means
    40% of the source dataset was dropped. For simple/hard/random keep-lists
    the cardinality is pinned to ``source_n - round_half_even(f * source_n)``.
    """

    indices: np.ndarray
    source_n: int
    method: str
    fraction_removed: float
    seed: int = 0
    parent_digest: str = ""
    scope: str | None = None

    def __post_init__(self):
        idx = _frozen_array(self.indices, np.int64)
        if idx.ndim != 1 or idx.size < 1:
            raise ContractError("keep-list must retain at least one index")
        if idx[0] < 0 or idx[-1] >= self.source_n:
            raise ContractError(
                f"indices must lie in [0, {self.source_n}), got range "
                f"[{int(idx[0])}, {int(idx[-1])}]"
            )
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ContractError("indices must be strictly increasing")
        if self.method not in KEEP_METHODS:
            raise ContractError(f"unknown keep-list method {self.method!r}")
        if not 0.0 <= self.fraction_removed <= 1.0:
            raise ContractError(f"fraction_removed must be in [0,1], got {self.fraction_removed}")
        if self.scope is not None and self.scope not in PRUNE_SCOPES:
            raise ContractError(f"unknown scope {self.scope!r}")
        if self.method == "identity" and idx.size != self.source_n:
            raise ContractError("identity keep-list must retain every index")
        if self.method in _SIZED_METHODS and self.scope != "per_cluster":
            # Per-cluster prunes round within each cluster, so only the
            # global-scope cardinality is pinned.
            expect = self.source_n - round_half_even(self.fraction_removed * self.source_n)
            if idx.size != expect:
                raise ContractError(
                    f"{self.method} keep-list over n={self.source_n} at "
                    f"fraction {self.fraction_removed} must retain {expect} "
                    f"indices, got {idx.size}"
                )
        object.__setattr__(self, "indices", idx)

    @property
    def n_kept(self) -> int:
        return self.indices.size


def identity_keeplist(n: int, parent_digest: str = "") -> KeepList:
    if n < 1:
        raise ContractError("identity keep-list needs n >= 1")
    return KeepList(
        indices=np.arange(n, dtype=np.int64),
        source_n=n,
        method="identity",
        fraction_removed=0.0,
        parent_digest=parent_digest,
    )


def compose(a: KeepList, b: KeepList) -> KeepList:
    """Map b's indices through a: selecting b from gather(X, a) equals
    selecting compose(a, b) from X."""
    if b.source_n != a.n_kept:
        raise ContractError(
            f"compose: inner keep-list indexes {b.source_n} rows, outer keeps {a.n_kept}"
        )
    merged = a.indices[b.indices]
    return KeepList(
        indices=merged,
        source_n=a.source_n,
        method="subsample",
        fraction_removed=1.0 - merged.size / a.source_n,
        seed=b.seed,
        parent_digest=a.parent_digest,
    )


def gather(matrix: EmbeddingMatrix, kl: KeepList) -> EmbeddingMatrix:
    """Rows of `matrix` at the kept indices, in order."""
    if kl.source_n != matrix.n_samples:
        raise ContractError(
            f"keep-list indexes {kl.source_n} rows but matrix has {matrix.n_samples}"
        )
    return EmbeddingMatrix(matrix.values[kl.indices])


def gather_labels(labels: LabelVector, kl: KeepList) -> LabelVector:
    if kl.source_n != labels.n_samples:
        raise ContractError(
            f"keep-list indexes {kl.source_n} rows but labels have {labels.n_samples}"
        )
    return LabelVector(labels.class_ids[kl.indices], labels.n_classes, labels.class_names)


# ---------------------------------------------------------------------------
# EMB1 / LBL1 binary I/O


def _read_header(data: bytes, magic: bytes, path) -> tuple[int, int]:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"{path}: truncated header at byte offset {len(data)} (need 16)")
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r} at byte offset 0 (want {magic!r})")
    version, a, b = struct.unpack_from("<III", data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte offset 4")
    return a, b


def write_embeddings(matrix: EmbeddingMatrix, path) -> None:
    header = EMB_MAGIC + struct.pack("<III", FORMAT_VERSION, matrix.n_samples, matrix.n_dims)
    payload = np.ascontiguousarray(matrix.values, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as f:
        data = f.read()
    rows, cols = _read_header(data, EMB_MAGIC, path)
    expect = HEADER_SIZE + 4 * rows * cols
    if len(data) < expect:
        raise FormatError(
            f"{path}: payload truncated at byte offset {len(data)} "
            f"(header declares {rows}x{cols}, need {expect} bytes)"
        )
    if len(data) > expect:
        raise FormatError(f"{path}: {len(data) - expect} trailing bytes at byte offset {expect}")
    flat = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=HEADER_SIZE)
    if not np.all(np.isfinite(flat)):
        bad = int(np.flatnonzero(~np.isfinite(flat))[0])
        raise FormatError(f"{path}: non-finite value at byte offset {HEADER_SIZE + 4 * bad}")
    try:
        return EmbeddingMatrix(flat.reshape(rows, cols))
    except ContractError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_labels(labels: LabelVector, path) -> None:
    header = LBL_MAGIC + struct.pack("<III", FORMAT_VERSION, labels.n_samples, labels.n_classes)
    payload = np.ascontiguousarray(labels.class_ids, dtype="<u4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
    if labels.class_names is not None:
        with open(f"{path}.names", "w", encoding="utf-8") as f:
            f.write("\n".join(labels.class_names) + "\n")


def read_labels(path) -> LabelVector:
    with open(path, "rb") as f:
        data = f.read()
    n, n_classes = _read_header(data, LBL_MAGIC, path)
    expect = HEADER_SIZE + 4 * n
    if len(data) < expect:
        raise FormatError(
            f"{path}: payload truncated at byte offset {len(data)} "
            f"(header declares {n} labels, need {expect} bytes)"
        )
    if len(data) > expect:
        raise FormatError(f"{path}: {len(data) - expect} trailing bytes at byte offset {expect}")
    ids = np.frombuffer(data, dtype="<u4", count=n, offset=HEADER_SIZE)
    over = np.flatnonzero(ids >= n_classes)
    if over.size:
        bad = int(over[0])
        raise FormatError(
            f"{path}: class id {int(ids[bad])} >= n_classes={n_classes} "
            f"at byte offset {HEADER_SIZE + 4 * bad}"
        )
    names = None
    names_path = f"{path}.names"
    try:
        with open(names_path, "r", encoding="utf-8") as f:
            lines = [line.rstrip("\n") for line in f]
        lines = lines[:-1] if lines and lines[-1] == "" else lines
        if len(lines) != n_classes:
            raise FormatError(
                f"{names_path}: {len(lines)} names for {n_classes} classes"
            )
        names = tuple(lines)
    except FileNotFoundError:
        pass
    try:
        return LabelVector(ids, int(n_classes), names)
    except ContractError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Keep-list text I/O


def write_keeplist(kl: KeepList, path) -> None:
    lines = [
        f"method = {kl.method}",
        f"source_n = {kl.source_n}",
        f"fraction_removed = {kl.fraction_removed!r}",
        f"seed = {kl.seed}",
        f"parent_digest = {kl.parent_digest}",
    ]
    if kl.scope is not None:
        lines.append(f"scope = {kl.scope}")
    lines.append("indices = " + " ".join(str(int(i)) for i in kl.indices))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def read_keeplist(path) -> KeepList:
    fields: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    required = {"method", "source_n", "fraction_removed", "seed", "indices"}
    missing = required - fields.keys()
    if missing:
        raise FormatError(f"{path}: missing fields {sorted(missing)}")
    try:
        indices = np.array(
            [int(tok) for tok in fields["indices"].split()], dtype=np.int64
        )
        kl = KeepList(
            indices=indices,
            source_n=int(fields["source_n"]),
            method=fields["method"],
            fraction_removed=float(fields["fraction_removed"]),
            seed=int(fields["seed"]),
            parent_digest=fields.get("parent_digest", ""),
            scope=fields.get("scope") or None,
        )
    except (ContractError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return kl


def with_parent_digest(kl: KeepList, digest: str) -> KeepList:
    return replace(kl, parent_digest=digest)
