"""
Seedable counter-based random streams

All randomness goes through numpy Generators backed by Philox, keyed by a
SeedSequence built from (seed, *path). Streams for different devices, layers or
replicates never share state, so results do not depend on evaluation order.
"""

from typing import Sequence

import numpy as np


def make_stream(seed: int, *path: int) -> np.random.Generator:
    """
    Build an independent stream for a position in the experiment tree

    Args:
        seed: Run seed (unsigned 64-bit)
        *path: Integer coordinates, e.g. (layer,) or (replicate, layer)

    Returns:
        Philox-backed numpy Generator
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(p) for p in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def device_stream(seed: int, device_index: int) -> np.random.Generator:
    """Stream dedicated to one device (fabrication sampling of a single cell)"""
    return make_stream(seed, 0xD0, device_index)


def replicate_seeds(seed: int, count: int) -> Sequence[int]:
    """Derive replicate seeds from a base seed"""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]
