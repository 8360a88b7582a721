"""
Synthetic classification problems for accproxcg.

Generates sparse, row-normalized +-1 problems so experiments and tests can run without
downloading LIBSVM files. Specs refer to them with paths like
``synthetic:n=2000,d=50,seed=0``.
"""

import logging
from typing import Dict, Union

import numpy as np
import scipy.sparse as sp

from accproxcg.data_io.libsvm_parser import SparseDataset, normalize_rows_l2
from accproxcg.errors import ArgumentError

logger = logging.getLogger("accproxcg.data_io")

SYNTHETIC_PREFIX = "synthetic:"

_DEFAULTS: Dict[str, Union[int, float]] = {
    "n": 2000,
    "d": 50,
    "density": 0.2,
    "noise": 0.1,
    "seed": 0,
}


def make_synthetic_classification(
    n: int = 2000,
    d: int = 50,
    density: float = 0.2,
    noise: float = 0.1,
    seed: int = 0,
) -> SparseDataset:
    """Build a sparse linear classification problem.

    Labels are the signs of a noisy linear score under a hidden Gaussian weight vector.
    Every row has at least one nonzero and is scaled to unit norm.

    Args:
        n: Number of examples
        d: Feature dimension
        density: Expected fraction of nonzero features per row
        noise: Standard deviation of the score noise
        seed: Generator seed

    Returns:
        SparseDataset: The normalized dataset
    """
    if n < 1 or d < 1:
        raise ArgumentError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not 0.0 < density <= 1.0:
        raise ArgumentError(f"density must lie in (0, 1], got {density}")
    if noise < 0:
        raise ArgumentError(f"noise must be >= 0, got {noise}")

    rng = np.random.default_rng(seed)
    mask = rng.random((n, d)) < density
    empty = ~mask.any(axis=1)
    mask[np.flatnonzero(empty), rng.integers(0, d, size=int(empty.sum()))] = True

    dense = np.where(mask, rng.standard_normal((n, d)), 0.0)
    w_true = rng.standard_normal(d)
    scores = dense @ w_true + noise * rng.standard_normal(n)
    labels = np.where(scores >= 0.0, 1.0, -1.0)

    dataset = SparseDataset(
        features=sp.csr_matrix(dense),
        labels=labels,
        name=f"synthetic-n{n}-d{d}-s{seed}",
    )
    logger.debug(f"Generated synthetic dataset {dataset.name} with {dataset.features.nnz} nonzeros")
    return normalize_rows_l2(dataset)


def is_synthetic_path(path: str) -> bool:
    """Check whether a dataset path names a synthetic problem."""
    return path.startswith(SYNTHETIC_PREFIX)


def parse_synthetic_path(path: str) -> Dict[str, Union[int, float]]:
    """Read the generator arguments out of a ``synthetic:`` path.

    Args:
        path: Path such as ``synthetic:n=2000,d=50,seed=0``

    Returns:
        Dict[str, Union[int, float]]: Generator keyword arguments, defaults filled in
    """
    if not is_synthetic_path(path):
        raise ArgumentError(f"not a synthetic dataset path: {path!r}")
    params = dict(_DEFAULTS)
    body = path[len(SYNTHETIC_PREFIX):].strip()
    if not body:
        return params
    for item in body.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in _DEFAULTS:
            raise ArgumentError(f"unknown synthetic parameter {item!r}")
        try:
            params[key] = float(value) if key in ("density", "noise") else int(value)
        except ValueError:
            raise ArgumentError(f"synthetic parameter {key} is not numeric: {value!r}")
    return params
