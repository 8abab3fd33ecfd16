"""Batch-embed manifest images into an EMB1 file.

Walks the manifest entries in order, preprocesses every listed image, and
runs the hosted model on each. Decode or read failures do not abort the
scan: they are collected and reported together, one line per image, so a
single corrupt file in a 2500-image dataset is diagnosed in one run.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .emb1 import write_emb1
from .preprocess import load_rgb, preprocess


class ExportError(Exception):
    """Export could not produce a complete embedding file."""


def _manifest_images(manifest_path: Path) -> list[str]:
    try:
        doc = json.loads(manifest_path.read_text())
        return [name for entry in doc["entries"] for name in entry["images"]]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ExportError(f"bad manifest {manifest_path}: {exc}") from exc


def export_embeddings(manifest: Path | str, model, out: Path | str,
                      root: Path | str | None = None) -> tuple[int, int]:
    """Embed all manifest images with `model`; returns (n_rows, dim)."""
    manifest = Path(manifest)
    root = Path(root) if root is not None else manifest.parent
    names = _manifest_images(manifest)
    if not names:
        raise ExportError(f"manifest {manifest} lists no images")

    expected = tuple(model.input_shape)
    rows, failures = [], []
    for name in names:
        try:
            x = preprocess(load_rgb(root / name))
            if x.shape != expected:
                raise ValueError(f"preprocessed shape {x.shape} != model input {expected}")
            rows.append(model.embed(x).astype(np.float32))
        except Exception as exc:
            failures.append(f"{name}: {exc}")
    if failures:
        raise ExportError("could not embed every image:\n  " + "\n  ".join(failures))

    values = np.stack(rows)
    write_emb1(out, values, names)
    return values.shape
