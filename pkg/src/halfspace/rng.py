"""Deterministic random-number plumbing.

Every sampler and randomized search in this package takes an explicit
generator (or a seed) so that identical seed + call sequence produces an
identical stream. Parallel or repeated trials must split seeds with
:func:`spawn_seeds` instead of reusing one generator.
"""

from __future__ import annotations

from typing import Union

import numpy as np

RngLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: RngLike = None) -> np.random.Generator:
    """Return a PCG64 generator for an int seed, a SeedSequence, or pass a
    Generator through unchanged. ``None`` seeds from the OS (non-reproducible;
    callers that need determinism must pass a seed)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is None:
        return np.random.Generator(np.random.PCG64())
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn_seeds(seed: Union[int, np.random.SeedSequence], n: int) -> list[np.random.SeedSequence]:
    """Split one seed into ``n`` independent child SeedSequences."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return ss.spawn(n)


def seed_fingerprint(ss: np.random.SeedSequence) -> int:
    """Stable 64-bit fingerprint of a SeedSequence, for report rows."""
    return int(ss.generate_state(1, np.uint64)[0])
