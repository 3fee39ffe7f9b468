"""Seeded random streams.

All stochastic behavior flows through numpy Generators over the PCG64 bit
generator (a documented, seedable 64-bit PRNG). ``split_streams`` derives
independent named streams from one seed via SeedSequence spawning, so e.g.
parameter init and shuffling cannot interfere.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def split_streams(seed: int, names: tuple[str, ...]) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.Generator(np.random.PCG64(child)) for name, child in zip(names, children)}
