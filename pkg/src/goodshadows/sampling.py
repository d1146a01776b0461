"""Seeded, chunked random streams.

Every chunk of ``CHUNK`` samples draws from its own generator seeded by
``(seed, chunk_index)``, so a result never depends on how chunks are
scheduled across workers.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 8192


def chunk_rng(seed, index, stream=0):
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, int(stream), int(index)])


def uniform(seed, n, dim, stream=0, workers=1):
    """``n`` uniform points in ``[0, 1)^dim``, identical for any ``workers``."""
    n = int(n)
    starts = list(range(0, n, CHUNK))

    def draw(k):
        size = min(CHUNK, n - starts[k])
        return chunk_rng(seed, k, stream).random((size, dim))

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(draw, range(len(starts))))
    else:
        parts = [draw(k) for k in range(len(starts))]
    if not parts:
        return np.empty((0, dim))
    return np.concatenate(parts, axis=0)


def normal(seed, n, dim, stream=0):
    n = int(n)
    parts = []
    for k, start in enumerate(range(0, n, CHUNK)):
        size = min(CHUNK, n - start)
        parts.append(chunk_rng(seed, k, stream).standard_normal((size, dim)))
    if not parts:
        return np.empty((0, dim))
    return np.concatenate(parts, axis=0)


def unit_vectors(seed, n, dim, stream=0):
    g = normal(seed, n, dim, stream)
    return g / np.linalg.norm(g, axis=1, keepdims=True)
