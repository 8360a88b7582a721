"""
Data input module for accproxcg.

This package reads LIBSVM-format datasets, normalizes them, generates synthetic
problems and draws mini-batches.
"""

from accproxcg.data_io.libsvm_parser import (
    SparseDataset,
    parse_libsvm,
    load_libsvm,
    serialize_libsvm,
    normalize_rows_l2,
)
from accproxcg.data_io.sampling import BatchIndex, BatchSampler, sample_batch
from accproxcg.data_io.synthetic import (
    make_synthetic_classification,
    is_synthetic_path,
    parse_synthetic_path,
)

__all__ = [
    "SparseDataset",
    "parse_libsvm",
    "load_libsvm",
    "serialize_libsvm",
    "normalize_rows_l2",
    "BatchIndex",
    "BatchSampler",
    "sample_batch",
    "make_synthetic_classification",
    "is_synthetic_path",
    "parse_synthetic_path",
]
