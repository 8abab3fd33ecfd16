"""Standard image preprocessing for hosted encoders.

Resize to 256x256 (bilinear), center-crop 224, scale to [0, 1], normalize
with ImageNet statistics, emit CHW float32. Deliberately self-contained so
the adapter embeds images identically with or without the toolkit installed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

RESIZE_PX = 256
CROP_PX = 224
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float64)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float64)


def load_rgb(path: Path | str) -> np.ndarray:
    """Decode an image file to HWC uint8 RGB."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def preprocess(img: np.ndarray) -> np.ndarray:
    """HWC uint8 RGB -> CHW float32, resized, cropped, normalized."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"expected HWC uint8 RGB, got {img.dtype} {img.shape}")
    resized = Image.fromarray(img).resize((RESIZE_PX, RESIZE_PX), Image.BILINEAR)
    arr = np.asarray(resized, dtype=np.float64)
    margin = (RESIZE_PX - CROP_PX) // 2
    arr = arr[margin : margin + CROP_PX, margin : margin + CROP_PX]
    arr = (arr / 255.0 - IMAGENET_MEAN) / IMAGENET_STD
    return arr.transpose(2, 0, 1).astype(np.float32)
