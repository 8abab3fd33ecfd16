"""SRA/1 frame primitives.

One JSON object per line in each direction. Float payloads travel as
base64-encoded little-endian f32 so a round trip preserves the exact bits
regardless of locale or JSON number formatting.
"""

from __future__ import annotations

import base64

import numpy as np

PROTOCOL_VERSION = "SRA/1"


def encode_f32(arr) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def decode_f32(payload: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(payload), dtype="<f4").astype(np.float64)
