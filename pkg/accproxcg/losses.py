"""
Loss models for accproxcg.

This module implements the four nonconvex margin losses, their gradient coefficients and
Lipschitz constants, batch and full objective evaluation over a sparse dataset, and the
finite-sum problem objects the optimizers run on.

For a margin u = b_i * a_i^T w every loss is a scalar function l(u), and the gradient of
one example is g(u) * b_i * a_i, where g = dl/du is the gradient coefficient.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from accproxcg.data_io.libsvm_parser import SparseDataset
from accproxcg.data_io.sampling import BatchIndex
from accproxcg.errors import ArgumentError
from accproxcg.prox_map import Regularizer

logger = logging.getLogger("accproxcg.losses")

ArrayLike = Union[float, np.ndarray]


class LossKind(str, Enum):
    """The nonconvex margin losses."""
    LORENZ = "lorenz"
    NORMALIZED_SIGMOID = "normalized_sigmoid"
    LOGISTIC_DIFFERENCE = "logistic_difference"
    TWO_LAYER_NN = "two_layer_nn"


_LIPSCHITZ = {
    LossKind.LORENZ: 4.0,
    LossKind.NORMALIZED_SIGMOID: 0.7698,
    LossKind.LOGISTIC_DIFFERENCE: 0.092372,
    LossKind.TWO_LAYER_NN: 0.15405,
}


@dataclass(frozen=True)
class LossModel:
    """A loss kind together with its smoothness constant."""

    kind: LossKind
    lipschitz: float

    @classmethod
    def of(cls, kind: Union[LossKind, str]) -> "LossModel":
        kind = LossKind(kind)
        return cls(kind=kind, lipschitz=_LIPSCHITZ[kind])


def _as_margins(u: ArrayLike) -> np.ndarray:
    arr = np.asarray(u, dtype=np.float64)
    if np.any(np.isnan(arr)):
        raise ArgumentError("margin is NaN")
    return arr


def _unwrap(result: np.ndarray, u: ArrayLike) -> ArrayLike:
    return float(result) if np.ndim(u) == 0 else result


def loss_value(kind: Union[LossKind, str], u: ArrayLike) -> ArrayLike:
    """Evaluate a loss at margin(s) u.

    Args:
        kind: Which loss
        u: Scalar margin or array of margins

    Returns:
        Loss value(s), same shape as u

    Raises:
        ArgumentError: If any margin is NaN
    """
    kind = LossKind(kind)
    arr = _as_margins(u)

    if kind is LossKind.LORENZ:
        z = np.minimum(arr - 1.0, 0.0)
        out = np.log1p(z * z)
    elif kind is LossKind.NORMALIZED_SIGMOID:
        # 1 - tanh(u) written with exp(-2|u|) only
        e = np.exp(-2.0 * np.abs(arr))
        out = np.where(arr > 0.0, 2.0 * e / (1.0 + e), 2.0 / (1.0 + e))
    elif kind is LossKind.LOGISTIC_DIFFERENCE:
        out = np.logaddexp(0.0, -arr) - np.logaddexp(0.0, -arr - 1.0)
    else:
        s = expit(-arr)
        out = s * s
    return _unwrap(out, u)


def loss_grad_coeff(kind: Union[LossKind, str], u: ArrayLike) -> ArrayLike:
    """Evaluate the gradient coefficient g(u) = dl/du.

    Args:
        kind: Which loss
        u: Scalar margin or array of margins

    Returns:
        Coefficient(s), same shape as u

    Raises:
        ArgumentError: If any margin is NaN
    """
    kind = LossKind(kind)
    arr = _as_margins(u)

    if kind is LossKind.LORENZ:
        z = np.minimum(arr - 1.0, 0.0)
        out = 2.0 * z / (1.0 + z * z)
    elif kind is LossKind.NORMALIZED_SIGMOID:
        e = np.exp(-2.0 * np.abs(arr))
        out = -4.0 * e / ((1.0 + e) * (1.0 + e))
    elif kind is LossKind.LOGISTIC_DIFFERENCE:
        out = expit(-arr - 1.0) - expit(-arr)
    else:
        s = expit(-arr)
        out = -2.0 * s * s * expit(arr)
    return _unwrap(out, u)


def lipschitz_constant(kind: Union[LossKind, str]) -> float:
    """Smoothness constant L of a loss."""
    return _LIPSCHITZ[LossKind(kind)]


def _check_weights(ds: SparseDataset, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (ds.d,):
        raise ArgumentError(f"weight vector has shape {w.shape}, expected ({ds.d},)")
    return w


def _rows(ds: SparseDataset, batch: Optional[BatchIndex]):
    if batch is None:
        return ds.features, ds.labels
    if len(batch) == 0:
        raise ArgumentError("batch is empty")
    return ds.features[batch.indices], ds.labels[batch.indices]


def batch_loss(
    ds: SparseDataset,
    kind: Union[LossKind, str],
    w: np.ndarray,
    batch: Optional[BatchIndex] = None,
) -> float:
    """Mean loss over a batch; the full dataset when ``batch`` is None."""
    w = _check_weights(ds, w)
    X, y = _rows(ds, batch)
    return float(np.mean(loss_value(kind, y * (X @ w))))


def batch_gradient(
    ds: SparseDataset,
    kind: Union[LossKind, str],
    w: np.ndarray,
    batch: Optional[BatchIndex] = None,
) -> np.ndarray:
    """Mean gradient over a batch; the full gradient when ``batch`` is None.

    Returns:
        np.ndarray: Dense vector of length d
    """
    w = _check_weights(ds, w)
    X, y = _rows(ds, batch)
    coeff = loss_grad_coeff(kind, y * (X @ w)) * y
    return np.asarray(X.T @ coeff, dtype=np.float64).ravel() / X.shape[0]


def full_objective(
    ds: SparseDataset, kind: Union[LossKind, str], w: np.ndarray, lam: float
) -> float:
    """Composite objective P(w) = f(w) + lam * ||w||_1.

    Raises:
        ArgumentError: If lam < 0
    """
    if lam < 0:
        raise ArgumentError(f"lambda must be >= 0, got {lam}")
    return batch_loss(ds, kind, w) + lam * float(np.sum(np.abs(w)))


def example_gradients(
    ds: SparseDataset, kind: Union[LossKind, str], w: np.ndarray
) -> np.ndarray:
    """All individual gradients as a dense (n, d) array. Meant for small n."""
    w = _check_weights(ds, w)
    coeff = loss_grad_coeff(kind, ds.labels * (ds.features @ w)) * ds.labels
    return np.asarray(ds.features.multiply(coeff[:, None]).todense(), dtype=np.float64)


class FiniteSumProblem(ABC):
    """Composite finite-sum problem min (1/n) sum_i f_i(w) + lam * ||w||_1.

    Counted methods (``gradient``, ``full_gradient``) add the number of individual
    gradients they evaluate to ``grad_evals``; metric methods (``objective``,
    ``loss``, ``metric_gradient``) are free.
    """

    def __init__(self, lam: float = 0.0):
        self.regularizer = Regularizer(lam)
        self.grad_evals = 0

    @property
    @abstractmethod
    def n(self) -> int:
        """Number of component functions."""

    @property
    @abstractmethod
    def d(self) -> int:
        """Dimension of w."""

    @property
    @abstractmethod
    def lipschitz(self) -> float:
        """Smoothness constant of every component."""

    @property
    def name(self) -> str:
        return self.__class__.__name__

    @abstractmethod
    def _loss(self, w: np.ndarray, batch: Optional[BatchIndex]) -> float:
        ...

    @abstractmethod
    def _gradient(self, w: np.ndarray, batch: Optional[BatchIndex]) -> np.ndarray:
        ...

    @abstractmethod
    def example_gradients(self, w: np.ndarray) -> np.ndarray:
        """Dense (n, d) array of individual gradients."""

    @property
    def lam(self) -> float:
        return self.regularizer.lam

    def zeros(self) -> np.ndarray:
        return np.zeros(self.d, dtype=np.float64)

    def loss(self, w: np.ndarray, batch: Optional[BatchIndex] = None) -> float:
        """Smooth part over a batch (full set when None). Not counted."""
        return self._loss(w, batch)

    def gradient(self, w: np.ndarray, batch: Optional[BatchIndex] = None) -> np.ndarray:
        """Batch gradient, counted as len(batch) individual gradients."""
        self.grad_evals += self.n if batch is None else len(batch)
        return self._gradient(w, batch)

    def full_gradient(self, w: np.ndarray) -> np.ndarray:
        """Exact gradient of f, counted as n individual gradients."""
        return self.gradient(w, None)

    def metric_gradient(self, w: np.ndarray) -> np.ndarray:
        """Exact gradient of f for reporting. Not counted."""
        return self._gradient(w, None)

    def objective(self, w: np.ndarray) -> float:
        """Composite objective P(w). Not counted."""
        return self._loss(w, None) + self.regularizer.value(w)

    def effective_passes(self) -> float:
        return self.grad_evals / self.n


class MarginLossProblem(FiniteSumProblem):
    """Sparse classification problem with one of the margin losses."""

    def __init__(self, dataset: SparseDataset, kind: Union[LossKind, str], lam: float = 0.0):
        super().__init__(lam)
        self.dataset = dataset
        self.kind = LossKind(kind)

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def d(self) -> int:
        return self.dataset.d

    @property
    def lipschitz(self) -> float:
        return lipschitz_constant(self.kind)

    @property
    def name(self) -> str:
        return f"{self.dataset.name}/{self.kind.value}"

    def _loss(self, w: np.ndarray, batch: Optional[BatchIndex]) -> float:
        return batch_loss(self.dataset, self.kind, w, batch)

    def _gradient(self, w: np.ndarray, batch: Optional[BatchIndex]) -> np.ndarray:
        return batch_gradient(self.dataset, self.kind, w, batch)

    def example_gradients(self, w: np.ndarray) -> np.ndarray:
        return example_gradients(self.dataset, self.kind, w)


class LeastSquaresProblem(FiniteSumProblem):
    """Quadratic problem with f_i(w) = (a_i^T w - y_i)^2 / 2.

    Its full-batch behaviour is that of linear conjugate gradients, which makes it the
    reference problem for finite-termination checks.
    """

    def __init__(self, A: Union[np.ndarray, sp.spmatrix], y: np.ndarray, lam: float = 0.0):
        super().__init__(lam)
        self.A = sp.csr_matrix(A) if sp.issparse(A) else np.asarray(A, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        if self.A.shape[0] != self.y.shape[0]:
            raise ArgumentError(f"{self.A.shape[0]} rows but {self.y.shape[0]} targets")

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def d(self) -> int:
        return int(self.A.shape[1])

    @property
    def lipschitz(self) -> float:
        A = self.A.toarray() if sp.issparse(self.A) else self.A
        return float(np.max(np.sum(A * A, axis=1)))

    def _rows(self, batch: Optional[BatchIndex]):
        if batch is None:
            return self.A, self.y
        if len(batch) == 0:
            raise ArgumentError("batch is empty")
        return self.A[batch.indices], self.y[batch.indices]

    def _loss(self, w: np.ndarray, batch: Optional[BatchIndex]) -> float:
        A, y = self._rows(batch)
        r = A @ w - y
        return 0.5 * float(np.mean(r * r))

    def _gradient(self, w: np.ndarray, batch: Optional[BatchIndex]) -> np.ndarray:
        A, y = self._rows(batch)
        r = A @ w - y
        return np.asarray(A.T @ r, dtype=np.float64).ravel() / A.shape[0]

    def example_gradients(self, w: np.ndarray) -> np.ndarray:
        A = self.A.toarray() if sp.issparse(self.A) else self.A
        r = A @ w - self.y
        return A * r[:, None]
