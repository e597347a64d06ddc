"""Encode a sentence jsonl file into the binary or jsonl embedding format.

The binary layout matches the consumer toolkit exactly: magic ``CEMB``,
little-endian u32 count and dimension, then row-major little-endian
float32 values in input sentence order. A sidecar manifest records the
model id, dimension, count, and normalization flag.

Model ids resolve through sentence-transformers; ids of the form
``debug-hash-<dim>`` resolve to a deterministic offline encoder (vectors
seeded from the sentence text) intended for tests and pipeline dry runs.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

MAGIC = b"CEMB"
_HEADER = struct.Struct("<4sII")


class ExportError(Exception):
    pass


class ModelUnavailableError(ExportError):
    pass


@dataclass(frozen=True)
class ExportJob:
    input_path: str
    output_path: str
    model: str = "all-mpnet-base-v2"
    batch_size: int = 32
    output_format: str = "binary"  # or "jsonl"
    normalize: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError("batch_size must be >= 1")
        if self.output_format not in ("binary", "jsonl"):
            raise ExportError(f"unknown output format: {self.output_format!r}")


class Encoder(Protocol):
    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class DebugHashEncoder:
    """Deterministic stand-in encoder: each text maps to a fixed vector
    seeded from its sha256, so identical sentences get identical rows."""

    def __init__(self, dim: int):
        self.dim = dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            seed = int.from_bytes(
                hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")
            rows[i] = np.random.default_rng(seed).normal(size=self.dim)
        return rows


class SentenceTransformerEncoder:
    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelUnavailableError(
                f"sentence-transformers is not installed (model {model_id!r})"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:
            raise ModelUnavailableError(
                f"could not load model {model_id!r}: {exc}"
            ) from exc

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(list(texts), show_progress_bar=False),
            dtype=np.float32,
        )


def resolve_encoder(model_id: str) -> Encoder:
    if model_id.startswith("debug-hash-"):
        suffix = model_id.removeprefix("debug-hash-")
        if not suffix.isdigit() or int(suffix) < 1:
            raise ExportError(f"bad debug encoder dimension in {model_id!r}")
        return DebugHashEncoder(int(suffix))
    return SentenceTransformerEncoder(model_id)


def read_sentences(path: str | Path) -> tuple[list[str], list[str]]:
    """Sentence ids and texts from a sentence jsonl file, in file order."""
    ids, texts = [], []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                ids.append(str(rec["sentence_id"]))
                texts.append(str(rec["text"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ExportError(f"{path}:{lineno}: bad sentence record ({exc})") from exc
    if not ids:
        raise ExportError(f"{path}: no sentences to encode")
    return ids, texts


def _encode_batched(encoder: Encoder, texts: list[str], batch_size: int) -> np.ndarray:
    chunks = [
        encoder.encode(texts[i:i + batch_size])
        for i in range(0, len(texts), batch_size)
    ]
    rows = np.vstack(chunks).astype(np.float32)
    if rows.shape[0] != len(texts):
        raise ExportError(
            f"encoder returned {rows.shape[0]} rows for {len(texts)} sentences"
        )
    return rows


def write_binary(path: str | Path, rows: np.ndarray) -> None:
    n, d = rows.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, d))
        fh.write(np.ascontiguousarray(rows, dtype="<f4").tobytes(order="C"))


def write_jsonl(path: str | Path, ids: Sequence[str], rows: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, row in zip(ids, rows):
            fh.write(json.dumps(
                {"sentence_id": sid, "vector": [float(x) for x in row]}
            ) + "\n")


def export_embeddings(job: ExportJob, encoder: Encoder | None = None) -> dict:
    """Encode every sentence (input order preserved) and write the embedding
    file plus a ``<output>.manifest.json`` sidecar. Returns the manifest."""
    ids, texts = read_sentences(job.input_path)
    encoder = encoder or resolve_encoder(job.model)
    rows = _encode_batched(encoder, texts, job.batch_size)
    if job.normalize:
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            row = int(np.flatnonzero(norms.ravel() == 0.0)[0])
            raise ExportError(f"zero embedding for sentence {ids[row]!r}")
        rows = (rows / norms).astype(np.float32)

    out = Path(job.output_path)
    try:
        if job.output_format == "binary":
            write_binary(out, rows)
        else:
            write_jsonl(out, ids, rows)
    except OSError as exc:
        raise ExportError(f"cannot write {out}: {exc}") from exc

    manifest = {
        "model": job.model,
        "count": int(rows.shape[0]),
        "dimension": int(rows.shape[1]),
        "normalized": job.normalize,
        "format": job.output_format,
        "input": str(job.input_path),
        "output": str(out),
    }
    manifest_path = out.with_name(out.name + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
