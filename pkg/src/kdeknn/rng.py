"""Seeded random streams.

All randomness goes through Philox (counter-based) generators keyed by a
master seed plus a stream path, so no global RNG state is ever touched and
independent consumers never share a stream.
"""

import zlib

import numpy as np


def _word(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    part = int(part)
    if part < 0:
        raise ValueError(f"stream identifiers must be non-negative, got {part}")
    return part


def make_rng(seed, *stream):
    """Return a Philox generator for ``(seed, *stream)``.

    ``stream`` items may be non-negative ints or strings, e.g.
    ``make_rng(42, "kde_knn", 1)``.
    """
    entropy = [_word(seed)] + [_word(p) for p in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
