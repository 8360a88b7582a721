"""
Proximal operators for accproxcg.

The l1 proximal map (soft-thresholding), the proximal update step, the gradient mapping
used as stationarity measure, and the momentum average that closes every inner step.
"""

from dataclasses import dataclass

import numpy as np

from accproxcg.errors import ArgumentError


@dataclass(frozen=True)
class Regularizer:
    """l1 regularizer lam * ||w||_1; lam = 0 is the smooth case with identity prox."""

    lam: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ArgumentError(f"lambda must be a finite number >= 0, got {self.lam}")

    def value(self, w: np.ndarray) -> float:
        if self.lam == 0.0:
            return 0.0
        return self.lam * float(np.sum(np.abs(w)))


def soft_threshold(v: np.ndarray, theta: float) -> np.ndarray:
    """Entrywise sign(v) * max(|v| - theta, 0).

    Raises:
        ArgumentError: If theta < 0
    """
    if theta < 0:
        raise ArgumentError(f"threshold must be >= 0, got {theta}")
    v = np.asarray(v, dtype=np.float64)
    if theta == 0.0:
        return v.copy()
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def prox_step(w: np.ndarray, dvec: np.ndarray, eta: float, reg: Regularizer) -> np.ndarray:
    """Proximal step y = prox_{eta*phi}(w + eta * dvec).

    Args:
        w: Current point
        dvec: Search direction
        eta: Step size, > 0
        reg: Regularizer

    Returns:
        np.ndarray: The proximal point

    Raises:
        ArgumentError: If eta <= 0
    """
    if not eta > 0:
        raise ArgumentError(f"step must be > 0, got {eta}")
    trial = np.asarray(w, dtype=np.float64) + eta * np.asarray(dvec, dtype=np.float64)
    if reg.lam == 0.0:
        return trial
    return soft_threshold(trial, eta * reg.lam)


def gradient_mapping(w: np.ndarray, eta: float, grad: np.ndarray, reg: Regularizer) -> np.ndarray:
    """Gradient mapping (w - prox_{eta*phi}(w - eta * grad)) / eta.

    Equals ``grad`` exactly when lam = 0.

    Raises:
        ArgumentError: If eta <= 0
    """
    if not eta > 0:
        raise ArgumentError(f"step must be > 0, got {eta}")
    grad = np.asarray(grad, dtype=np.float64)
    if reg.lam == 0.0:
        return grad.copy()
    w = np.asarray(w, dtype=np.float64)
    return (w - soft_threshold(w - eta * grad, eta * reg.lam)) / eta


def momentum_combine(w: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """Convex combination (1 - gamma) * w + gamma * y.

    Raises:
        ArgumentError: If gamma is outside (0, 1]
    """
    if not 0.0 < gamma <= 1.0:
        raise ArgumentError(f"gamma must lie in (0, 1], got {gamma}")
    y = np.asarray(y, dtype=np.float64)
    if gamma == 1.0:
        return y.copy()
    return (1.0 - gamma) * np.asarray(w, dtype=np.float64) + gamma * y
