"""Per-sentence embedding matrices and their two on-disk formats.

Binary layout: magic ``CEMB``, little-endian u32 count and dimension, then
``n * d`` little-endian IEEE-754 float32 values row-major, rows in
sentence-index order. The jsonl alternative carries
``{"sentence_id": ..., "vector": [...]}`` records in any order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmbeddingFormatError

MAGIC = b"CEMB"
_HEADER = struct.Struct("<4sII")
NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense float32 matrix with one row per sentence id in ``index``."""

    index: tuple[str, ...]
    rows: np.ndarray
    normalized: bool

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


def _detect_normalized(rows: np.ndarray) -> bool:
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    return bool(np.all(np.abs(norms - 1.0) <= NORM_TOLERANCE))


def _check_finite(rows: np.ndarray, index: Sequence[str]) -> None:
    bad = np.flatnonzero(~np.isfinite(rows).all(axis=1))
    if bad.size:
        row = int(bad[0])
        raise EmbeddingFormatError(
            f"non-finite value in row {row} (sentence {index[row]!r})"
        )


def _build(index: Sequence[str], rows: np.ndarray) -> EmbeddingMatrix:
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    _check_finite(rows, index)
    return EmbeddingMatrix(
        index=tuple(index), rows=rows, normalized=_detect_normalized(rows)
    )


def load_embeddings(path: str | Path, index: Sequence[str]) -> EmbeddingMatrix:
    """Load either format; rows come back aligned to ``index`` order.

    The format is sniffed from the leading magic bytes. Errors are raised
    for a row-count mismatch, inconsistent dimensions, and non-finite
    values (naming the offending row).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return _load_binary(path, index)
    return _load_jsonl(path, index)


def _load_binary(path: Path, index: Sequence[str]) -> EmbeddingMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise EmbeddingFormatError(f"{path}: truncated header")
    magic, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise EmbeddingFormatError(
            f"{path}: payload is {len(raw)} bytes, header implies {expected}"
        )
    if n != len(index):
        raise EmbeddingFormatError(
            f"{path}: {n} rows but {len(index)} sentence ids"
        )
    rows = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d)
    return _build(index, rows)


def _load_jsonl(path: Path, index: Sequence[str]) -> EmbeddingMatrix:
    vectors: dict[str, list[float]] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                sid = rec["sentence_id"]
                vec = rec["vector"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: bad record ({exc})") from exc
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: sentence {sid!r} has dimension "
                    f"{len(vec)}, expected {dim}"
                )
            if sid in vectors:
                raise EmbeddingFormatError(f"{path}:{lineno}: duplicate sentence {sid!r}")
            vectors[sid] = vec
    if len(vectors) != len(index):
        raise EmbeddingFormatError(
            f"{path}: {len(vectors)} vectors but {len(index)} sentence ids"
        )
    missing = [sid for sid in index if sid not in vectors]
    if missing:
        raise EmbeddingFormatError(f"{path}: no vector for sentence {missing[0]!r}")
    rows = np.array([vectors[sid] for sid in index], dtype=np.float32)
    if rows.ndim != 2:
        raise EmbeddingFormatError(f"{path}: vectors are not a rectangular matrix")
    return _build(index, rows)


def write_embeddings_binary(path: str | Path, rows: np.ndarray) -> None:
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    n, d = rows.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, d))
        fh.write(rows.astype("<f4").tobytes(order="C"))


def write_embeddings_jsonl(path: str | Path, index: Sequence[str], rows: np.ndarray) -> None:
    rows = np.asarray(rows, dtype=np.float32)
    with open(path, "w", encoding="utf-8") as fh:
        for sid, row in zip(index, rows):
            fh.write(json.dumps(
                {"sentence_id": sid, "vector": [float(x) for x in row]}
            ) + "\n")


def normalize_rows(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit Euclidean norm (no-op when already unit)."""
    if matrix.normalized:
        return matrix
    norms = np.linalg.norm(matrix.rows, axis=1, keepdims=True)
    zero = np.flatnonzero(norms.ravel() == 0.0)
    if zero.size:
        row = int(zero[0])
        raise EmbeddingFormatError(
            f"cannot normalize zero row {row} (sentence {matrix.index[row]!r})"
        )
    rows = (matrix.rows / norms).astype(np.float32)
    return EmbeddingMatrix(index=matrix.index, rows=rows, normalized=True)
