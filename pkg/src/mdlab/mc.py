"""Deterministic, thread-count-invariant Monte Carlo plumbing.

Sampling is split into a fixed number of logical blocks.  Block ``i`` of
experiment ``name`` under master seed ``s`` always draws from the same
counter-based stream (Philox keyed through a SeedSequence spawned at
``(crc32(name), i)``), and block results are merged in block order by the
caller's thread.  Thread count therefore only changes scheduling, never a
single output bit.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

__all__ = ["N_BLOCKS", "block_sizes", "block_rng", "map_blocks", "MCAccumulator"]

#: Fixed logical block count; independent of the worker thread count.
N_BLOCKS = 64


def block_sizes(n_samples: int, n_blocks: int = N_BLOCKS) -> List[int]:
    """Split n_samples into a fixed, thread-independent partition."""
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    base, extra = divmod(n_samples, n_blocks)
    return [base + (1 if i < extra else 0) for i in range(n_blocks)]


def _stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def block_rng(seed: int, name: str, block: int) -> np.random.Generator:
    """Counter-based generator for (master seed, experiment name, block)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_stream_key(name), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def map_blocks(
    fn: Callable[[int, np.random.Generator, int], object],
    n_samples: int,
    seed: int,
    name: str,
    threads: int = 1,
    n_blocks: int = N_BLOCKS,
) -> list:
    """Run fn(block_index, rng, block_size) over all blocks; results in block order."""
    sizes = block_sizes(n_samples, n_blocks)
    jobs = [(i, size) for i, size in enumerate(sizes) if size > 0]
    if threads <= 1:
        return [fn(i, block_rng(seed, name, i), size) for i, size in jobs]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        futures = [pool.submit(fn, i, block_rng(seed, name, i), size) for i, size in jobs]
        return [f.result() for f in futures]


@dataclass
class MCAccumulator:
    """Streaming mean / standard error over deterministic block partials."""

    n: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add_block(self, values: np.ndarray) -> None:
        self.n += values.size
        self.total += float(np.sum(values))
        self.total_sq += float(np.sum(np.square(values, dtype=np.float64)))

    def add_block_moments(self, n: int, total: float, total_sq: float) -> None:
        self.n += int(n)
        self.total += float(total)
        self.total_sq += float(total_sq)

    @property
    def mean(self) -> float:
        return self.total / self.n if self.n else float("nan")

    @property
    def stderr(self) -> float:
        """Sample standard deviation of the mean (sqrt(var / n))."""
        if self.n < 2:
            return float("nan")
        var = (self.total_sq - self.total ** 2 / self.n) / (self.n - 1)
        return float(np.sqrt(max(var, 0.0) / self.n))
