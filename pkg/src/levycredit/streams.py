"""Splittable random streams and a scheduling-independent block map.

A stream is identified by a 64-bit base seed and a spawn key. Child streams
append to the key, so ``RngStream(seed).child(3).child(7)`` always yields the
same variates no matter which worker draws them or in what order.

Monte Carlo loops are cut into fixed-size blocks; block ``j`` draws from
``stream.child(j)``. Workers only change *who* computes a block, never what
it contains, and results are re-assembled in block order before any
reduction, so estimates are bitwise identical for any worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["RngStream", "resolve_workers", "map_blocks", "THREADS_ENV"]

THREADS_ENV = "LEVY_DEFAULT_THREADS"

# Fixed first-level keys keep path and barrier randomness disjoint.
PATH_DOMAIN = 0
BARRIER_DOMAIN = 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    key: tuple = ()

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}", field="seed")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits", field="seed")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "key", tuple(int(k) for k in self.key))

    @property
    def index(self):
        return self.key[-1] if self.key else 0

    def child(self, index):
        if index < 0:
            raise ConfigError("stream index must be nonnegative", field="index")
        return RngStream(self.seed, self.key + (int(index),))

    def paths(self):
        return self.child(PATH_DOMAIN)

    def barriers(self):
        return self.child(BARRIER_DOMAIN)

    def generator(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))

    def provenance(self):
        return {"seed": self.seed, "key": list(self.key)}


def resolve_workers(workers=None):
    """Worker count: explicit value, else ``os.cpu_count()``, capped by the env var."""
    n = workers if workers is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            cap = int(cap)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}", field=THREADS_ENV)
        if cap >= 1:
            n = min(n, cap)
    return max(1, int(n))


def map_blocks(func, n, block_size, stream, workers=None):
    """Run ``func(block_stream, size)`` over ``ceil(n / block_size)`` blocks.

    Block ``j`` receives ``stream.child(j)``. ``func`` must return an array
    whose first axis has length ``size``; outputs are concatenated in block
    order.
    """
    if n < 1:
        raise ConfigError("need at least one sample", field="n_samples")
    if block_size < 1:
        raise ConfigError("block_size must be positive", field="block_size")
    sizes = [block_size] * (n // block_size)
    if n % block_size:
        sizes.append(n % block_size)

    def run(j):
        return func(stream.child(j), sizes[j])

    nw = min(resolve_workers(workers), len(sizes))
    if nw == 1:
        parts = [run(j) for j in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return np.concatenate(parts, axis=0)
