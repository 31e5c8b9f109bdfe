"""Seed derivation.

Stream layout, version 1: every random stream is a ``numpy.random.PCG64``
generator built from ``SeedSequence(seed, spawn_key=(tag, *index))``. ``seed``
is the user-visible 64-bit seed, ``tag`` a small integer naming the consumer
(see :data:`TAGS`) and ``index`` the stream position within that consumer, for
example the environment number. Kernels never draw their own randomness; they
receive pre-drawn uniform arrays so the numba and numpy paths consume
identical streams.
"""
from __future__ import annotations

import numpy as np

RNG_VERSION = 1

TAGS = {
    "grow": 1,
    "outgrowth": 2,
    "environment": 3,
    "walkers": 4,
    "finite-scaling": 5,
    "hausdorff": 6,
    "spectral": 7,
    "leaf-sample": 8,
    "validate": 9,
}


def make_rng(seed: int, tag: str | int, *index: int) -> np.random.Generator:
    if isinstance(tag, str):
        tag = TAGS[tag]
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=(tag, *index))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng: np.random.Generator | int | None, tag: str = "grow") -> np.random.Generator:
    """Accept a generator, or a seed to derive one from."""
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(0 if rng is None else int(rng), tag)
