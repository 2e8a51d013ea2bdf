"""Seed plumbing and replicate fan-out.

Every random quantity is drawn from a stream addressed by (master seed, name,
index...), so results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def substream(seed: int, *path) -> np.random.Generator:
    """Independent generator for the named sub-stream ``path`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("KFDA_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, optionally over processes; order preserved."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
