"""Seed plumbing: SeedSequence wants non-negative entropy, user seeds may not be."""

import numpy as np

_U64 = (1 << 64) - 1


def seed_seq(*parts: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(p) & _U64 for p in parts])
