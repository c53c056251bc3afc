"""Deterministic chunked execution for embarrassingly parallel trials."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_TRIALS = 1 << 15


def as_seed_key(seed) -> tuple[int, ...]:
    """Normalize an int or a sequence of ints into a seed-key tuple."""
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(v) for v in seed)


def chunk_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, CHUNK_TRIALS)
    return [CHUNK_TRIALS] * full + ([rest] if rest else [])


def run_chunked(trials: int, seed_key, chunk_fn, workers: int = 1):
    """Sum ``chunk_fn(rng, size)`` over fixed-size trial chunks.

    Each chunk owns an independent generator seeded by (seed_key..., chunk
    index), and chunk boundaries depend only on the trial count, so the
    summed integer accumulators are identical for every worker count.
    ``chunk_fn`` returns a tuple of numpy arrays.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    sizes = chunk_sizes(trials)
    key = [int(v) for v in seed_key]

    def one(idx: int):
        rng = np.random.default_rng(key + [idx])
        return chunk_fn(rng, sizes[idx])

    if workers <= 1:
        results = [one(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(sizes))))

    totals = [np.array(part, copy=True) for part in results[0]]
    for parts in results[1:]:
        for acc, part in zip(totals, parts):
            acc += part
    return tuple(totals)
