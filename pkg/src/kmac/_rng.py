"""Seeded random streams.

All randomness goes through Philox (a counter-based 64-bit generator) keyed by
a ``SeedSequence`` built from the user seed plus integer stream labels.  The
same ``(seed, *keys)`` tuple reproduces the same stream on any machine and
independently of how replicates are scheduled across workers.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for stream ``keys`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Collapse ``(seed, *keys)`` into a fresh 63-bit integer seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
