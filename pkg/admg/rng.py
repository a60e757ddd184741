"""Seed-derived, splittable random streams."""

import numpy as np


def make_stream(seed: int, *keys: int) -> np.random.Generator:
    """
    Build a generator for the sub-stream ``keys`` of a master seed.

    The same (seed, keys) always yields the same stream, and distinct keys
    give statistically independent streams.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)
