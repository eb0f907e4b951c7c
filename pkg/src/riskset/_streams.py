"""Deterministic RNG stream derivation.

Every randomized unit of work (a restart, the neighborhood batch, a
subsample draw, a sweep target, ...) owns a private generator derived
from ``(seed, tag, *path)`` through ``numpy.random.SeedSequence`` feeding
a Philox bit generator.  Results are therefore identical no matter how
many threads execute the units or in which order they run.
"""

from __future__ import annotations

import numpy as np

# Stream tags.  Frozen: changing any value changes every seeded result.
RESTART = 1
NEIGHBORHOOD = 2
SUBSAMPLE = 3
SWEEP_TARGET = 4
CORRELATION = 5
RESAMPLE = 6


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the work unit addressed by ``path``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), *map(int, path)))))


def child_seed(seed: int, *path: int) -> int:
    """Derive an integer seed for a nested component (e.g. one sweep target)."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return int(np.random.SeedSequence((int(seed), *map(int, path))).generate_state(1, np.uint64)[0])
