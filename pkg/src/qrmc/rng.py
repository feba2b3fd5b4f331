"""Deterministic random streams derived from one master seed.

Each randomized purpose owns a stream id, so masks, noise, clustering and
synthetic data are independently reproducible from a single 64-bit seed.
"""

from __future__ import annotations

import numpy as np

MASK_STREAM = 1
NOISE_STREAM = 2
KMEANS_STREAM = 3
SYNTH_STREAM = 4


def stream_rng(seed: int, stream: int, *subkeys: int) -> np.random.Generator:
    """Generator for (seed, stream, subkeys...), e.g. per frame or channel."""
    return np.random.default_rng([int(seed), int(stream), *map(int, subkeys)])
