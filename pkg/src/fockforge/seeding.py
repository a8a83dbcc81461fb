"""Deterministic RNG stream derivation.

All randomness in the package flows from a single integer master seed.
Independent consumers (optimizer restarts, offspring, noise realizations,
sweep cells) get their own streams derived from the master seed plus a
structured path, so results are bit-reproducible regardless of evaluation
order or worker count.
"""

import numpy as np

# Stream tags: first element of every spawn path. Keeps streams for
# different purposes disjoint even when the remaining path collides.
STREAM_SINGLE_LAYER = 1
STREAM_TRANSFER = 2
STREAM_OFFSPRING = 3
STREAM_NOISE = 4
STREAM_SWEEP_CELL = 5


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """A generator seeded from (master_seed, path), independent per path."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return np.random.default_rng(seq)


def derive_seed(master_seed: int, *path: int) -> int:
    """A plain integer seed derived from (master_seed, path)."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
