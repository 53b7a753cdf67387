"""Deterministic block-parallel Monte Carlo.

Samples are cut into fixed blocks; block ``b`` of arm ``a`` draws from
``RngStream(master_seed, a * 2**32 + b)``. Blocks are evaluated in any
order by any number of workers and concatenated by block index, so the
result depends only on ``(master_seed, arm, samples, block_size)``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from seedtrace import kernels
from seedtrace.tree_model import GrowthTree, RngStream, grow_many

BLOCK_SIZE = 1000
ARM_STRIDE = 2**32

# rows of a parent-array batch kept in memory at once
_BATCH_CELLS = 1 << 22


def _run_block(args):
    task, master_seed, stream, count = args
    return task(RngStream(master_seed, stream).generator, count)


def run_blocks(task, samples: int, master_seed: int, arm: int = 0, workers: int = 1,
               block_size: int = BLOCK_SIZE) -> np.ndarray:
    """Evaluate ``task(generator, count) -> array`` over all blocks and concatenate."""
    if samples < 1:
        raise ValueError("samples must be positive")
    jobs = []
    start = 0
    b = 0
    while start < samples:
        count = min(block_size, samples - start)
        jobs.append((task, master_seed, arm * ARM_STRIDE + b, count))
        start += count
        b += 1
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_block(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class GTask:
    """Balancedness statistic of trees grown from a seed."""

    seed_parent: tuple
    n: int

    @classmethod
    def of(cls, seed: GrowthTree, n: int) -> "GTask":
        return cls(tuple(int(p) for p in seed.parent), n)

    def __call__(self, gen, count):
        seed = GrowthTree(self.seed_parent)
        rows = max(1, _BATCH_CELLS // self.n)
        out = []
        done = 0
        while done < count:
            c = min(rows, count - done)
            out.append(kernels.g_totals(grow_many(seed, self.n, c, gen)))
            done += c
        return np.concatenate(out)


@dataclass(frozen=True)
class DiameterTask:
    seed_parent: tuple
    n: int

    def __call__(self, gen, count):
        seed = GrowthTree(self.seed_parent)
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            out[i] = kernels.diameter(grow_many(seed, self.n, 1, gen)[0])
        return out


@dataclass(frozen=True)
class EdgeSideTask:
    """Child-side component size of one seed edge after growth."""

    seed_parent: tuple
    child: int
    n: int

    def __call__(self, gen, count):
        seed = GrowthTree(self.seed_parent)
        rows = max(1, _BATCH_CELLS // self.n)
        out = np.empty(count, dtype=np.int64)
        done = 0
        while done < count:
            c = min(rows, count - done)
            batch = grow_many(seed, self.n, c, gen)
            for r in range(c):
                out[done + r] = kernels.subtree_sizes(batch[r])[self.child]
            done += c
        return out
