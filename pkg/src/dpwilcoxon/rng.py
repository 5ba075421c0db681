"""Seed handling and reproducible substreams.

Randomized entry points accept ``rng`` as an integer seed, a
``numpy.random.SeedSequence``, a ``numpy.random.Generator`` or ``None``
(fresh OS entropy). Top-level operations first reduce it to one integer
seed, which is recorded for provenance, and then derive every stream they
need from that seed with an explicit spawn key. A unit of work (a trial, a
grid cell, a chunk of reference draws) always gets the same key regardless
of how work is scheduled.
"""
from __future__ import annotations

from typing import Union

import numpy as np

RNGLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

# first element of every spawn key; keeps the streams of different roles apart
REFERENCE, NOISE, TRIAL, DERIVED, CELL, RESAMPLE = range(6)


def fresh_seed() -> int:
    """Draw a 63-bit seed from system entropy."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> np.uint64(1))


def resolve_seed(rng: RNGLike) -> int:
    """Reduce any accepted RNG argument to a non-negative integer seed."""
    if rng is None:
        return fresh_seed()
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    if isinstance(rng, np.random.SeedSequence):
        return int(rng.generate_state(1, np.uint64)[0] >> np.uint64(1))
    seed = int(rng)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return seed


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(key))


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))


def derive_seed(seed: int, *key: int) -> int:
    """Integer seed for a sub-computation that records its own seed."""
    return int(seed_sequence(seed, DERIVED, *key).generate_state(1, np.uint64)[0] >> np.uint64(1))


def as_generator(rng: RNGLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng)
    return np.random.default_rng(resolve_seed(rng))


def uniform_open(gen: np.random.Generator, size=None):
    """Uniform draws on the open interval (0, 1).

    ``Generator.random`` returns values in [0, 1); exact zeros are redrawn
    so that inverse-CDF transforms stay finite.
    """
    if size is None:
        u = gen.random()
        while u == 0.0:
            u = gen.random()
        return u
    u = gen.random(size)
    mask = u == 0.0
    while mask.any():
        u[mask] = gen.random(int(mask.sum()))
        mask = u == 0.0
    return u
