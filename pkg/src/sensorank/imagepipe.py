"""Image decoding, preprocessing, and manifest embedding.

Preprocessing follows the standard evaluation recipe: bilinear resize to
256x256, center crop to 224, scale to [0,1], then ImageNet channel
normalization. Scene-level encoders skip pixels entirely and embed the
symbolic scene records carried by the manifest.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .embio import EmbeddingMatrix, write_emb1
from .errors import DimensionMismatch
from .jacobian import IMAGENET_MEAN, IMAGENET_STD
from .probes import DatasetManifest

RESIZE_PX = 256
CROP_PX = 224


def load_image(path: Path | str) -> np.ndarray:
    """Decode to (H, W, 3) uint8."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def preprocess(img: np.ndarray) -> np.ndarray:
    """uint8 HWC -> normalized float32 CHW at 224x224.

    Images are resized to exactly 256x256 (bilinear), then center-cropped;
    aspect ratio is not preserved, matching the reference recipe.
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatch(f"expected (H, W, 3) image, got shape {img.shape}")
    resized = Image.fromarray(img).resize((RESIZE_PX, RESIZE_PX), Image.BILINEAR)
    margin = (RESIZE_PX - CROP_PX) // 2
    cropped = resized.crop((margin, margin, margin + CROP_PX, margin + CROP_PX))
    arr = np.asarray(cropped, dtype=np.float32) / 255.0
    mean = np.asarray(IMAGENET_MEAN, dtype=np.float32)
    std = np.asarray(IMAGENET_STD, dtype=np.float32)
    return np.transpose((arr - mean) / std, (2, 0, 1))


def embed_manifest(
    manifest: DatasetManifest,
    encoder,
    root: Path | str,
    out_path: Path | str | None = None,
) -> EmbeddingMatrix:
    """Embed every image referenced by a manifest; ids are relative paths.

    `encoder` is either a pixel oracle (has .embed) fed preprocessed CHW
    tensors, or a scene encoder (has .embed_scene) fed the manifest's
    symbolic scenes. Optionally writes the result as EMB1.
    """
    paths = manifest.image_paths()
    if hasattr(encoder, "embed_scene"):
        scenes = manifest.scenes()
        rows = [encoder.embed_scene(scenes[p]) for p in paths]
    else:
        root = Path(root)
        rows = [np.asarray(encoder.embed(preprocess(load_image(root / p)).ravel())) for p in paths]
    values = np.asarray(rows, dtype=np.float64)
    emb = EmbeddingMatrix(values, paths)
    if out_path is not None:
        write_emb1(out_path, values, paths)
    return emb
