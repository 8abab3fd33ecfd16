"""Deterministic RNG stream derivation.

Every stochastic routine in the package derives its generator from a root
seed plus a small integer path, so independent pipeline stages never share
or race on a stream. Reordering stages, or adding new ones, cannot shift
the draws of existing stages.
"""

from __future__ import annotations

import numpy as np

# Stream tags. Fixed for all time: changing one silently changes every
# downstream artifact, so treat additions as append-only.
BINDING_TRIALS = 0
SAMEDIFF_PAIRS = 1
PROBE_PIXELS = 2
SKETCH_DIRECTIONS = 3
LOCAL_ANCHORS = 4
ENCODER_INIT = 5
NOISE_DELTAS = 6
POOL_VECTORS = 7


def generator(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the stream addressed by (seed, *path)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, path)])))


def child_seed(seed: int, *path: int) -> int:
    """Collapse (seed, *path) into a single u64 seed for APIs that take one."""
    ss = np.random.SeedSequence([int(seed), *map(int, path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
