"""Embedding container and file formats.

The native format is EMB1, a dependency-free binary layout:

    magic b"EMB1" | u32 N | u32 D | N*D little-endian f32, row major
    | JSON trailer {"ids": [...]} encoded UTF-8

The trailer sits after the float block and runs to end of file. A CSV
import (header ``id,dim0,...,dimK``) is accepted for interop with tools
that cannot write EMB1.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .errors import EmbeddingFormatError

_MAGIC = b"EMB1"
_HEADER = struct.Struct("<II")


@dataclasses.dataclass
class EmbeddingMatrix:
    """N embeddings of dimension D with row identifiers.

    The container accepts N >= 1 so single-image embedding files round-trip;
    covariance-based metrics enforce N >= 2 at their own entry points.
    """

    values: np.ndarray
    ids: list[str]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise EmbeddingFormatError(f"expected a 2-d array, got shape {self.values.shape}")
        n, d = self.values.shape
        if n < 1 or d < 1:
            raise EmbeddingFormatError(f"need at least one row and one column, got {n}x{d}")
        if len(self.ids) != n:
            raise EmbeddingFormatError(f"{len(self.ids)} ids for {n} rows")
        if len(set(self.ids)) != len(self.ids):
            raise EmbeddingFormatError("duplicate ids in embedding matrix")
        if not np.all(np.isfinite(self.values)):
            raise EmbeddingFormatError("embedding values must be finite")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, row_id: str) -> np.ndarray:
        try:
            return self.values[self.ids.index(row_id)]
        except ValueError:
            raise KeyError(row_id) from None

    def index(self) -> dict[str, int]:
        return {rid: i for i, rid in enumerate(self.ids)}


def write_emb1(path: Path | str, values: np.ndarray, ids: list[str]) -> None:
    values = np.ascontiguousarray(np.asarray(values), dtype="<f4")
    if values.ndim != 2:
        raise EmbeddingFormatError(f"expected a 2-d array, got shape {values.shape}")
    n, d = values.shape
    if len(ids) != n:
        raise EmbeddingFormatError(f"{len(ids)} ids for {n} rows")
    trailer = json.dumps({"ids": list(ids)}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(n, d))
        fh.write(values.tobytes())
        fh.write(trailer)


def read_emb1(path: Path | str) -> EmbeddingMatrix:
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {blob[:4]!r}, expected {_MAGIC!r}")
    if len(blob) < 4 + _HEADER.size:
        raise EmbeddingFormatError(f"{path}: truncated header")
    n, d = _HEADER.unpack_from(blob, 4)
    body_end = 4 + _HEADER.size + 4 * n * d
    if len(blob) < body_end:
        raise EmbeddingFormatError(f"{path}: expected {n}x{d} f32 block, file too short")
    values = np.frombuffer(blob, dtype="<f4", count=n * d, offset=4 + _HEADER.size)
    values = values.reshape(n, d)
    try:
        trailer = json.loads(blob[body_end:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EmbeddingFormatError(f"{path}: malformed JSON trailer: {exc}") from exc
    ids = trailer.get("ids")
    if not isinstance(ids, list) or len(ids) != n:
        raise EmbeddingFormatError(f"{path}: trailer ids missing or wrong length")
    return EmbeddingMatrix(values, [str(i) for i in ids])


def read_csv_embeddings(path: Path | str) -> EmbeddingMatrix:
    """CSV import: header id,dim0,...,dimK; one row per embedding."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmbeddingFormatError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise EmbeddingFormatError(f"{path}: first column must be 'id', got {header[:1]}")
        expected = ["id"] + [f"dim{i}" for i in range(len(header) - 1)]
        if header != expected:
            raise EmbeddingFormatError(f"{path}: header must be id,dim0,...,dim{len(header) - 2}")
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise EmbeddingFormatError(f"{path}: no data rows")
    return EmbeddingMatrix(np.asarray(rows, dtype=np.float64), ids)


def read_embeddings(path: Path | str) -> EmbeddingMatrix:
    """Dispatch on extension: .csv goes through the CSV importer, else EMB1."""
    if str(path).lower().endswith(".csv"):
        return read_csv_embeddings(path)
    return read_emb1(path)
