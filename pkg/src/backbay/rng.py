"""Seeded, splittable random streams.

Every stochastic routine takes a ``numpy.random.Generator``; streams for
independent work items are derived with ``SeedSequence.spawn`` so results
do not depend on execution order.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split(seed: int, n: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for a named sub-task."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
