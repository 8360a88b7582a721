"""
LIBSVM parser for accproxcg.

This module reads and writes the LIBSVM sparse text format and holds the immutable
row-sparse dataset type every optimizer works on.
"""

import io
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, TextIO, Tuple, Union

import numpy as np
import scipy.sparse as sp

from accproxcg.errors import ArgumentError, LibSVMFormatError, LibSVMParseError

logger = logging.getLogger("accproxcg.data_io")

DEFAULT_LABEL_MAP: Dict[float, int] = {0.0: -1, 1.0: 1, -1.0: -1}


@dataclass(frozen=True)
class SparseDataset:
    """Row-sparse feature matrix with +-1 labels.

    Indices are 0-based internally; within each row they are strictly increasing and no
    explicit zeros are stored. Instances are immutable and safe to share across runs.

    Attributes:
        features: CSR matrix of shape (n, d)
        labels: Float array of length n with entries in {-1, +1}
        name: Display name used in reports
    """

    features: sp.csr_matrix
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self) -> None:
        features = self.features
        if not sp.issparse(features) or features.format != "csr":
            raise ArgumentError("features must be a scipy.sparse CSR matrix")
        if features.shape[0] != self.labels.shape[0]:
            raise ArgumentError(
                f"{features.shape[0]} rows but {self.labels.shape[0]} labels"
            )
        if self.labels.size and not np.all(np.abs(self.labels) == 1.0):
            raise ArgumentError("every label must be -1 or +1")
        if features.nnz and np.any(features.data == 0.0):
            raise ArgumentError("explicit zeros must not be stored")
        if features.nnz > 1:
            steps = np.diff(features.indices)
            within_row = np.ones(steps.shape, dtype=bool)
            boundaries = features.indptr[1:-1] - 1
            within_row[boundaries[(boundaries >= 0) & (boundaries < steps.size)]] = False
            if np.any(steps[within_row] <= 0):
                raise ArgumentError("indices within a row must be strictly increasing")

    @property
    def n(self) -> int:
        """Number of examples."""
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        """Feature dimension."""
        return int(self.features.shape[1])

    @property
    def rows(self) -> List[List[Tuple[int, float]]]:
        """Rows as sorted (0-based index, value) pairs."""
        f = self.features
        return [
            [(int(j), float(v)) for j, v in zip(
                f.indices[f.indptr[i]:f.indptr[i + 1]], f.data[f.indptr[i]:f.indptr[i + 1]]
            )]
            for i in range(self.n)
        ]

    def row_norms(self) -> np.ndarray:
        """Euclidean norm of every row."""
        return np.sqrt(np.asarray(self.features.multiply(self.features).sum(axis=1)).ravel())

    def stats(self) -> Dict[str, Union[int, float]]:
        """Summary statistics used by ``check-data``."""
        norms = self.row_norms()
        positives = int(np.sum(self.labels > 0))
        return {
            "n": self.n,
            "d": self.d,
            "nnz": int(self.features.nnz),
            "density": float(self.features.nnz) / max(1, self.n * self.d),
            "positives": positives,
            "negatives": self.n - positives,
            "min_row_norm": float(norms.min()) if self.n else 0.0,
            "max_row_norm": float(norms.max()) if self.n else 0.0,
        }


def _build_label_map(label_map: Optional[Mapping[Union[str, float], int]]) -> Dict[float, int]:
    mapping = dict(DEFAULT_LABEL_MAP)
    if label_map:
        for raw, mapped in label_map.items():
            mapping[float(raw)] = int(mapped)
    return mapping


def parse_libsvm(
    text: Union[str, TextIO, Iterable[str]],
    n_features: Optional[int] = None,
    label_map: Optional[Mapping[Union[str, float], int]] = None,
    name: str = "dataset",
) -> SparseDataset:
    """Parse LIBSVM text into a dataset.

    Each nonempty line reads ``<label> <idx>:<val> ...`` with 1-based, strictly
    increasing indices. ``#`` starts a comment; LF and CRLF line ends are accepted.

    Args:
        text: The whole text, an open text stream, or an iterable of lines
        n_features: Feature dimension override; must be at least the largest index seen
        label_map: Extra raw-label to +-1 mappings on top of {0: -1, 1: +1, -1: -1}
        name: Display name of the dataset

    Returns:
        SparseDataset: The parsed dataset, rows in input order

    Raises:
        LibSVMParseError: A token is not numeric or a label has no mapping
        LibSVMFormatError: An index is below 1 or indices do not increase
    """
    if isinstance(text, str):
        lines: Iterable[str] = io.StringIO(text)
    else:
        lines = text

    mapping = _build_label_map(label_map)
    indptr = [0]
    indices: List[int] = []
    values: List[float] = []
    labels: List[float] = []
    max_index = 0

    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()

        try:
            raw_label = float(tokens[0])
        except ValueError:
            raise LibSVMParseError(f"label {tokens[0]!r} is not numeric", line_number)
        if raw_label not in mapping:
            raise LibSVMParseError(
                f"label {tokens[0]!r} has no +-1 mapping (pass a label map)", line_number
            )
        labels.append(float(mapping[raw_label]))

        previous = 0
        for token in tokens[1:]:
            index_text, sep, value_text = token.partition(":")
            if not sep:
                raise LibSVMParseError(f"feature token {token!r} is not idx:val", line_number)
            try:
                index = int(index_text)
                value = float(value_text)
            except ValueError:
                raise LibSVMParseError(f"feature token {token!r} is not numeric", line_number)
            if not math.isfinite(value):
                raise LibSVMParseError(f"feature value {value_text!r} is not finite", line_number)
            if index < 1:
                raise LibSVMFormatError(f"index {index} is below 1", line_number)
            if index <= previous:
                raise LibSVMFormatError(
                    f"index {index} does not increase after {previous}", line_number
                )
            previous = index
            max_index = max(max_index, index)
            if value != 0.0:
                indices.append(index - 1)
                values.append(value)
        indptr.append(len(indices))

    d = max_index
    if n_features is not None:
        if n_features < max_index:
            raise ArgumentError(f"n_features={n_features} is below the largest index {max_index}")
        d = n_features

    features = sp.csr_matrix(
        (
            np.asarray(values, dtype=np.float64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(indptr, dtype=np.int64),
        ),
        shape=(len(labels), d),
    )
    dataset = SparseDataset(
        features=features, labels=np.asarray(labels, dtype=np.float64), name=name
    )
    logger.debug(f"Parsed {dataset.n} examples with {dataset.d} features ({features.nnz} nonzeros)")
    return dataset


def _decode_lines(handle: Iterable[bytes]) -> Iterator[str]:
    for line_number, raw in enumerate(handle, start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise LibSVMParseError(
                f"byte 0x{raw[e.start]:02x} at column {e.start + 1} is not valid UTF-8", line_number
            ) from e


def load_libsvm(
    path: str,
    n_features: Optional[int] = None,
    label_map: Optional[Mapping[Union[str, float], int]] = None,
) -> SparseDataset:
    """Read a LIBSVM file from disk (UTF-8).

    Args:
        path: File to read
        n_features: Feature dimension override
        label_map: Extra label mappings

    Returns:
        SparseDataset: The parsed dataset, named after the file

    Raises:
        LibSVMParseError: A line is not valid UTF-8, or as for ``parse_libsvm``
    """
    with open(path, "rb") as handle:
        return parse_libsvm(
            _decode_lines(handle),
            n_features=n_features,
            label_map=label_map,
            name=os.path.splitext(os.path.basename(path))[0],
        )


def serialize_libsvm(ds: SparseDataset) -> str:
    """Write a dataset back to LIBSVM text with round-trip float formatting.

    Args:
        ds: Dataset to write

    Returns:
        str: LIBSVM text, one line per example, LF line ends
    """
    out = []
    for label, row in zip(ds.labels, ds.rows):
        head = "+1" if label > 0 else "-1"
        body = " ".join(f"{j + 1}:{v!r}" for j, v in row)
        out.append(f"{head} {body}".rstrip())
    return "\n".join(out) + ("\n" if out else "")


def normalize_rows_l2(ds: SparseDataset) -> SparseDataset:
    """Scale every nonzero row to unit Euclidean norm.

    Zero rows stay zero and rows already of unit norm are left bit-identical, which makes
    the operation idempotent. Every entry of the result lies in [-1, 1].

    Args:
        ds: Dataset to normalize

    Returns:
        SparseDataset: A new dataset with the same labels
    """
    norms = ds.row_norms()
    scale = norms.copy()
    scale[(norms == 0.0) | (np.abs(norms - 1.0) <= 4 * np.finfo(np.float64).eps)] = 1.0
    counts = np.diff(ds.features.indptr)
    data = ds.features.data / np.repeat(scale, counts)
    features = sp.csr_matrix(
        (data, ds.features.indices.copy(), ds.features.indptr.copy()), shape=ds.features.shape
    )
    return SparseDataset(features=features, labels=ds.labels.copy(), name=ds.name)
