"""
Mini-batch sampling for accproxcg.

Batches are drawn without replacement, uniformly over all size-b subsets, with a
partial Fisher-Yates shuffle. Given the same generator seed and call order the index
sequence is identical across runs and platforms.
"""

from dataclasses import dataclass

import numpy as np

from accproxcg.errors import ArgumentError


@dataclass(frozen=True)
class BatchIndex:
    """A mini-batch: distinct example indices in increasing order.

    Sorted order makes batch reductions run in index order.
    """

    indices: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @property
    def size(self) -> int:
        """Cardinality b of the batch."""
        return len(self)

    @classmethod
    def full(cls, n: int) -> "BatchIndex":
        """The batch containing every example."""
        return cls(indices=np.arange(n, dtype=np.int64))


def integer_cube_root(n: int) -> int:
    """floor(n ** (1/3)) without floating-point misses at perfect cubes."""
    if n < 0:
        raise ArgumentError(f"need n >= 0, got n={n}")
    r = int(round(n ** (1.0 / 3.0)))
    while r ** 3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


def _check_sizes(n: int, b: int) -> None:
    if n < 1:
        raise ArgumentError(f"need at least one example, got n={n}")
    if b < 1 or b > n:
        raise ArgumentError(f"batch size must satisfy 1 <= b <= n, got b={b}, n={n}")


def _partial_shuffle(rng: np.random.Generator, pool: np.ndarray, b: int) -> np.ndarray:
    n = pool.shape[0]
    for i in range(b):
        j = int(rng.integers(i, n))
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:b])


def sample_batch(rng: np.random.Generator, n: int, b: int) -> BatchIndex:
    """Draw b distinct indices from range(n) uniformly at random.

    Args:
        rng: Seeded generator owned by the caller
        n: Number of examples
        b: Batch size

    Returns:
        BatchIndex: The sampled batch

    Raises:
        ArgumentError: If b > n or b < 1
    """
    _check_sizes(n, b)
    if b == n:
        return BatchIndex.full(n)
    pool = np.arange(n, dtype=np.int64)
    return BatchIndex(indices=_partial_shuffle(rng, pool, b))


class BatchSampler:
    """Reusable sampler keeping its index pool between draws.

    The pool stays a permutation of range(n) after every draw, so each draw is an exact
    uniform subset and costs O(b) swaps.
    """

    def __init__(self, n: int, b: int, rng: np.random.Generator):
        """Initialize the sampler.

        Args:
            n: Number of examples
            b: Batch size
            rng: Seeded generator owned by the run
        """
        _check_sizes(n, b)
        self.n = n
        self.b = b
        self.rng = rng
        self._pool = np.arange(n, dtype=np.int64)

    def draw(self) -> BatchIndex:
        """Draw the next batch."""
        if self.b == self.n:
            return BatchIndex.full(self.n)
        return BatchIndex(indices=_partial_shuffle(self.rng, self._pool, self.b))
