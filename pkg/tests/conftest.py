"""
Pytest configuration for accproxcg tests.

This module provides fixtures and common utilities for all tests.
"""

import json
import logging

import numpy as np
import pytest
import scipy.sparse as sp

from accproxcg.config import AppConfig
from accproxcg.data_io import SparseDataset, make_synthetic_classification
from accproxcg.losses import LeastSquaresProblem, LossKind, MarginLossProblem


@pytest.fixture
def rng():
    """A seeded generator for test data."""
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dataset(rng):
    """Six dense examples with four features, for enumeration checks."""
    dense = rng.standard_normal((6, 4))
    labels = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    return SparseDataset(features=sp.csr_matrix(dense), labels=labels, name="tiny")


@pytest.fixture
def small_dataset():
    """A row-normalized synthetic problem small enough for fast optimizer runs."""
    return make_synthetic_classification(n=200, d=10, density=0.5, seed=3)


@pytest.fixture
def sigmoid_problem(small_dataset):
    """Normalized-sigmoid problem with a small l1 weight."""
    return MarginLossProblem(small_dataset, LossKind.NORMALIZED_SIGMOID, lam=1e-3)


def make_quadratic(d: int = 20, low: float = 1.0, high: float = 1.5, seed: int = 7):
    """Least-squares problem with n = d whose Hessian has eigenvalues in [low, high].

    Returns:
        Tuple[LeastSquaresProblem, np.ndarray]: The problem and its minimizer (f* = 0)
    """
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigenvalues = np.linspace(low, high, d)
    A = np.sqrt(d) * np.sqrt(eigenvalues)[:, None] * q.T
    w_star = rng.standard_normal(d)
    return LeastSquaresProblem(A, A @ w_star), w_star


@pytest.fixture
def quadratic():
    """Well-conditioned 20-dimensional quadratic and its minimizer."""
    return make_quadratic()


@pytest.fixture
def app_config(tmp_path):
    """Application configuration writing into a temporary directory."""
    return AppConfig(output_dir=str(tmp_path / "out"), max_workers=2)


@pytest.fixture
def write_spec(tmp_path):
    """Write an experiment spec document to a JSON file and return its path."""

    def _write(document, name="spec.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def spec_document(tmp_path):
    """A small synthetic experiment spec."""
    return {
        "name": "smoke",
        "dataset": {"path": "synthetic:n=200,d=10,density=0.5,seed=3"},
        "loss": "normalized_sigmoid",
        "lam": 1e-3,
        "epochs": 3,
        "seeds": [0],
        "output": str(tmp_path / "results" / "smoke.csv"),
        "runs": [{"algorithm": "acc_prox_cg_sarah", "preset": "v1"}],
    }


@pytest.fixture
def restore_logging():
    """Undo handler changes the CLI makes to the package logger."""
    logger = logging.getLogger("accproxcg")
    handlers, level, propagate = list(logger.handlers), logger.level, logger.propagate
    yield
    logger.handlers = handlers
    logger.setLevel(level)
    logger.propagate = propagate
