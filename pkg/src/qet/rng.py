"""Seeded, stream-split random numbers.

A :class:`SeedSpec` names an independent stream; sub-streams (one per Monte
Carlo chunk) are derived through ``numpy.random.SeedSequence`` spawn keys,
so results never depend on how chunks are scheduled across workers.
Gaussians are produced by an explicit Box-Muller transform of the uniform
stream, which keeps the sample sequence a documented function of the seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if int(self.stream) < 0:
            raise ValueError("stream must be non-negative")

    def generator(self, *substream: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *map(int, substream)))
        return np.random.Generator(np.random.PCG64(ss))

    def to_dict(self):
        return {"seed": int(self.seed), "stream": int(self.stream)}


def as_generator(rng) -> np.random.Generator:
    """Accept a SeedSpec, an int seed or an existing Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeedSpec):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return SeedSpec(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normal samples (E|z|^2 = 1) via Box-Muller.

    With u1 in (0, 1] and u2 in [0, 1): |z|^2 = -log(u1) is Exp(1) and the
    phase 2*pi*u2 is uniform, which is exactly the circular complex normal.
    """
    u1 = 1.0 - gen.random(shape)
    u2 = gen.random(shape)
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)
