"""EMB1 writer.

The toolkit's native embedding container:

    magic b"EMB1" | u32 N | u32 D | N*D little-endian f32, row major
    | JSON trailer {"ids": [...]} encoded UTF-8, to end of file

Implemented here from the format description so the adapter stays
installable on its own; the consuming toolkit is the reference reader.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

_MAGIC = b"EMB1"
_HEADER = struct.Struct("<II")


def write_emb1(path: Path | str, values: np.ndarray, ids: list[str]) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {values.shape}")
    n, d = values.shape
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} rows")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(n, d))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
        fh.write(json.dumps({"ids": list(ids)}).encode("utf-8"))
