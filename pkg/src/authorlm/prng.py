"""Seeded random streams shared by every sampling operation in the package.

All randomness flows through numpy's PCG64 generator, keyed by integer
tuples via ``SeedSequence``.  Two runs with the same key produce the same
stream on any platform, and independent work items (one per author, trial,
epoch, ...) get statistically independent streams without coordinating.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "derive_seed"]


def stream(*key: int) -> np.random.Generator:
    """Return the PCG64 generator for an integer key tuple.

    ``stream(seed)`` is the root stream for a run; derived streams add
    components, e.g. ``stream(seed, author_index, epoch)``.
    """
    if not key:
        raise ValueError("stream key must contain at least one integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def derive_seed(*key: int) -> int:
    """Collapse a key tuple into one reproducible 32-bit integer seed."""
    if not key:
        raise ValueError("seed key must contain at least one integer")
    return int(np.random.SeedSequence(key).generate_state(1)[0])
