"""Seed derivation shared by every stochastic stage.

Two layers:

* ``stage_seed(master, name)`` turns the master seed from the run config into
  an independent 64-bit seed per pipeline stage (first 8 bytes of
  ``sha256(f"{master}:{name}")``, big-endian). Re-running one stage in
  isolation with the same master seed reproduces its numbers exactly.
* ``sub_rng(seed, *key)`` gives the generator for one iteration / restart /
  tree. It is ``numpy.random.default_rng(SeedSequence(seed, spawn_key=key))``,
  so streams depend only on ``(seed, key)`` and never on execution order.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def stage_seed(master: int, name: str) -> int:
    digest = hashlib.sha256(f"{int(master)}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def sub_seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def sub_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed_sequence(seed, *key))


def sub_seed32(seed: int, *key: int) -> int:
    """32-bit seed for consumers that cannot take a Generator (numba kernels)."""
    return int(sub_seed_sequence(seed, *key).generate_state(1, np.uint32)[0])


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items``; results always come back in input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, size: int) -> list[range]:
    return [range(start, min(start + size, n)) for start in range(0, n, size)]
