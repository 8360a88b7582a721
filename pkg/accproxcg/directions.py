"""
Search directions for accproxcg.

This module holds the SARAH recursive gradient estimator, the conjugate-parameter
formulas (FR, AFR, PR and the FR-PR hybrid, at lag 1 or lag t), the direction
recursion d_k = -v_k + beta_k * d_ref, and a brute-force check of the estimator's
variance identity.
"""

import itertools
import logging
from collections import deque
from math import comb
from typing import Deque, Optional, Tuple, Union

import numpy as np

from accproxcg.data_io.libsvm_parser import SparseDataset
from accproxcg.errors import ArgumentError, DegenerateDenominatorError
from accproxcg.losses import LossKind, example_gradients
from accproxcg.schemas import BetaFormula, BetaRule

logger = logging.getLogger("accproxcg.directions")

DENOMINATOR_EPS = 1e-24
MAX_ENUMERATION_N = 12


def _same_shape(*vectors: np.ndarray) -> None:
    shape = np.shape(vectors[0])
    for v in vectors[1:]:
        if np.shape(v) != shape:
            raise ArgumentError(f"dimension mismatch: {shape} vs {np.shape(v)}")


def sarah_update(v_prev: np.ndarray, grad_cur: np.ndarray, grad_prev: np.ndarray) -> np.ndarray:
    """SARAH estimator v_k = grad_cur - grad_prev + v_prev.

    Both batch gradients are taken on the same mini-batch, at w_k and w_{k-1}.
    """
    _same_shape(v_prev, grad_cur, grad_prev)
    return grad_cur - grad_prev + v_prev


def _ref_norm_sq(v_ref: np.ndarray) -> float:
    denom = float(np.dot(v_ref, v_ref))
    if not denom >= DENOMINATOR_EPS:
        raise DegenerateDenominatorError(
            f"reference estimator has squared norm {denom:.3e} < {DENOMINATOR_EPS:.0e}"
        )
    return denom


def beta_fr(v_cur: np.ndarray, v_ref: np.ndarray) -> float:
    """Fletcher-Reeves ratio ||v_cur||^2 / ||v_ref||^2.

    Raises:
        DegenerateDenominatorError: If ||v_ref||^2 < 1e-24
    """
    _same_shape(v_cur, v_ref)
    return float(np.dot(v_cur, v_cur)) / _ref_norm_sq(v_ref)


def beta_afr(v_cur: np.ndarray, v_ref: np.ndarray, rho: float, beta_o: float) -> float:
    """Adaptive FR: min(beta_o, rho * beta_fr)."""
    if rho <= 0 or beta_o <= 0:
        raise ArgumentError(f"need rho > 0 and beta_o > 0, got rho={rho}, beta_o={beta_o}")
    return min(beta_o, rho * beta_fr(v_cur, v_ref))


def beta_pr(v_cur: np.ndarray, v_ref: np.ndarray) -> float:
    """Polak-Ribiere <v_cur, v_cur - v_ref> / ||v_ref||^2."""
    _same_shape(v_cur, v_ref)
    return float(np.dot(v_cur, v_cur - v_ref)) / _ref_norm_sq(v_ref)


def beta_frpr(v_cur: np.ndarray, v_ref: np.ndarray) -> float:
    """FR-PR hybrid: beta_pr clamped into [-beta_fr, beta_fr]."""
    fr = beta_fr(v_cur, v_ref)
    pr = beta_pr(v_cur, v_ref)
    return float(np.clip(pr, -fr, fr))


def _evaluate(formula: BetaFormula, v_cur: np.ndarray, v_ref: np.ndarray) -> float:
    if formula.rule is BetaRule.FR:
        return beta_fr(v_cur, v_ref)
    if formula.rule is BetaRule.AFR:
        return beta_afr(v_cur, v_ref, formula.rho, formula.beta_o)
    return beta_frpr(v_cur, v_ref)


def beta_lagged(formula: BetaFormula, v_cur: np.ndarray, v_lag_t: np.ndarray) -> float:
    """The same formulas with the reference estimator taken t steps back.

    With t = 1 this is exactly the lag-1 formula.

    Raises:
        DegenerateDenominatorError: If ||v_lag_t||^2 < 1e-24
    """
    return _evaluate(formula, v_cur, v_lag_t)


def compute_beta(
    formula: BetaFormula, v_cur: np.ndarray, v_ref: np.ndarray
) -> Tuple[float, bool]:
    """Conjugate parameter for the optimizers.

    A degenerate reference norm, or a beta above ``beta_max``, restarts with beta = 0.

    Returns:
        Tuple[float, bool]: (beta, restarted)
    """
    try:
        beta = _evaluate(formula, v_cur, v_ref)
    except DegenerateDenominatorError as e:
        logger.debug(f"Restart: {e}")
        return 0.0, True
    if formula.beta_max is not None and abs(beta) > formula.beta_max:
        logger.debug(f"Restart: |beta|={abs(beta):.3e} exceeds beta_max={formula.beta_max}")
        return 0.0, True
    return beta, False


def direction_update(v_k: np.ndarray, beta: float, d_ref: np.ndarray) -> np.ndarray:
    """Search direction d_k = -v_k + beta * d_ref."""
    _same_shape(v_k, d_ref)
    if beta == 0.0:
        return -v_k
    return -v_k + beta * d_ref


class EstimatorState:
    """Estimator and direction history of one epoch.

    Holds the last ``lag + 1`` (v, d) pairs, enough for the lag-1 and lag-t formulas.
    Index 0 of an epoch is the exact full gradient and the initial direction.
    """

    def __init__(self, lag: int = 1):
        if lag < 1:
            raise ArgumentError(f"lag must be >= 1, got {lag}")
        self.lag = lag
        self.k = -1
        self._history: Deque[Tuple[np.ndarray, np.ndarray]] = deque(maxlen=lag + 1)

    def start_epoch(self, v0: np.ndarray, d0: np.ndarray) -> None:
        self._history.clear()
        self._history.append((v0, d0))
        self.k = 0

    def record(self, v: np.ndarray, d: np.ndarray) -> None:
        """Append the estimator and direction of the next inner step."""
        if self.k < 0:
            raise ArgumentError("start_epoch must be called before record")
        self._history.append((v, d))
        self.k += 1

    @property
    def v_cur(self) -> np.ndarray:
        return self._history[-1][0]

    @property
    def d_cur(self) -> np.ndarray:
        return self._history[-1][1]

    def reference(self, lag: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """(v, d) at step k + 1 - lag, seen from the step about to be recorded."""
        if not 1 <= lag <= len(self._history):
            raise ArgumentError(
                f"lag {lag} not available at step {self.k} (history {len(self._history)})"
            )
        return self._history[-lag]


def lemma1_variance_check(
    ds: SparseDataset,
    kind: Union[LossKind, str],
    w_k: np.ndarray,
    w_prev: np.ndarray,
    v_prev: Optional[np.ndarray],
    b: int,
) -> Tuple[float, float]:
    """Compare the exact variance of one SARAH step with its closed form.

    The left side is the mean of ||v_k - v_prev||^2 over every size-b batch, the right
    side the closed-form expression in the full and individual gradient differences.
    ``v_prev`` cancels out of v_k - v_prev and is accepted for signature symmetry.

    Args:
        ds: Small dataset, 2 <= n <= 12
        kind: Loss
        w_k: Current iterate
        w_prev: Previous iterate
        v_prev: Previous estimator (unused by the difference)
        b: Batch size

    Returns:
        Tuple[float, float]: (lhs, rhs)

    Raises:
        ArgumentError: If n is outside [2, 12] or b outside [1, n]
    """
    n = ds.n
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise ArgumentError(f"enumeration needs 2 <= n <= {MAX_ENUMERATION_N}, got n={n}")
    if not 1 <= b <= n:
        raise ArgumentError(f"batch size must satisfy 1 <= b <= n, got b={b}, n={n}")
    if v_prev is not None:
        _same_shape(v_prev, w_k)

    diffs = example_gradients(ds, kind, w_k) - example_gradients(ds, kind, w_prev)

    total = 0.0
    for batch in itertools.combinations(range(n), b):
        step = diffs[list(batch)].mean(axis=0)
        total += float(np.dot(step, step))
    lhs = total / comb(n, b)

    mean_diff = diffs.mean(axis=0)
    full_term = float(np.dot(mean_diff, mean_diff))
    spread_term = float(np.mean(np.sum(diffs * diffs, axis=1)))
    rhs = (n * (b - 1)) / (b * (n - 1)) * full_term + (n - b) / (b * (n - 1)) * spread_term
    return lhs, rhs
