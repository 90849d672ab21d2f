"""Seeded random streams.

All stochastic code draws from Philox, a counter-based generator with a
published algorithm (Salmon et al., "Parallel random numbers: as easy as
1, 2, 3"; see also the NumPy reference).  The root stream keys Philox
directly with the user's 64-bit seed.  Substreams derive fresh 64-bit
keys through ``numpy.random.SeedSequence`` spawn paths, so tasks that
may run in any order (sweep cells, mixture components) get independent
streams whose content does not depend on scheduling.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def derive_key(seed: int, *path: int) -> int:
    """Fold ``seed`` and an integer path into a fresh 64-bit Philox key."""
    if not path:
        return int(seed) & MASK64
    ss = np.random.SeedSequence(int(seed) & MASK64,
                                spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """A Generator over Philox keyed by ``derive_key(seed, *path)``."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))
