"""
Line searches for accproxcg.

Step sizes satisfying the stochastic strong-Wolfe conditions on a fixed mini-batch:

    phi(eta) <= phi(0) + c1 * eta * phi'(0)                    (sufficient decrease)
    |<v_next(eta), d>| <= -c2 * <v_k, d>                       (curvature)

and the reduced curvature-only condition used before lagged conjugate steps. The
searched step eta_raw is capped: eta = min(eta_raw, eta2). When the budget runs out the
search falls back to eta2 and reports honestly which conditions hold there.

The searches are deterministic. Callers supply the 1-D closures and are responsible for
caching batch gradients so a trial step is never evaluated twice.
"""

import logging
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from accproxcg.errors import ArgumentError, SearchFailureError
from accproxcg.schemas import SearchOutcome, WolfeParams

logger = logging.getLogger("accproxcg.linesearch")

ScalarFn = Callable[[float], float]
VectorFn = Callable[[float], np.ndarray]


class _Budget(Exception):
    pass


class _Trials:
    """Bookkeeping shared by both searches."""

    def __init__(self, limit: int):
        self.limit = limit
        self.count = 0
        self.gradient_evals = 0
        self.any_finite = False
        self.results: Dict[float, Tuple[bool, bool]] = {}

    def tick(self) -> None:
        if self.count >= self.limit:
            raise _Budget()
        self.count += 1


def _finish(
    eta_raw: float,
    params: WolfeParams,
    trials: _Trials,
    armijo: bool,
    curvature: bool,
    fallback: bool,
) -> SearchOutcome:
    return SearchOutcome(
        eta=min(eta_raw, params.eta2),
        eta_raw=eta_raw,
        satisfied_armijo=armijo,
        satisfied_curvature=curvature,
        trials=trials.count,
        gradient_evals=trials.gradient_evals,
        fallback_used=fallback,
    )


def _fallback(params: WolfeParams, trials: _Trials, what: str) -> SearchOutcome:
    if not trials.any_finite:
        raise SearchFailureError(f"{what}: every trial step gave a non-finite value")
    armijo, curvature = trials.results.get(params.eta2, (False, False))
    logger.debug(
        f"{what} exhausted its budget after {trials.count} trials; falling back to "
        f"eta2={params.eta2} (armijo={armijo}, curvature={curvature})"
    )
    return _finish(params.eta2, params, trials, armijo, curvature, fallback=True)


def wolfe_search(
    phi: ScalarFn,
    dphi: ScalarFn,
    v_next_at: VectorFn,
    v_k: np.ndarray,
    d: np.ndarray,
    params: WolfeParams,
) -> SearchOutcome:
    """Bracketing and bisection search for the stochastic strong-Wolfe conditions.

    Args:
        phi: eta -> batch objective at w + eta * d
        dphi: eta -> <batch gradient at w + eta * d, d>; only phi'(0) is used
        v_next_at: eta -> candidate estimator at w + eta * d on the same batch
        v_k: Current estimator
        d: Search direction, a descent direction for v_k
        params: Search parameters

    Returns:
        SearchOutcome: Capped step and flags

    Raises:
        ArgumentError: If <v_k, d> >= 0
        SearchFailureError: If every trial value is non-finite
    """
    descent = float(np.dot(v_k, d))
    if not descent < 0.0:
        raise ArgumentError(f"direction is not a descent direction: <v, d> = {descent}")
    target = -params.c2 * descent

    trials = _Trials(params.max_bracket + params.max_zoom)
    phi0 = float(phi(0.0))
    slope0 = float(dphi(0.0))
    trials.gradient_evals += 1
    if not (math.isfinite(phi0) and math.isfinite(slope0)):
        raise SearchFailureError("objective or slope is non-finite at the current point")

    def armijo_ok(eta: float, value: float) -> bool:
        return value <= phi0 + params.c1 * eta * slope0

    def curvature(eta: float) -> float:
        trials.gradient_evals += 1
        return float(np.dot(v_next_at(eta), d))

    def zoom(lo: float, hi: float, phi_lo: float) -> Optional[SearchOutcome]:
        for _ in range(params.max_zoom):
            mid = 0.5 * (lo + hi)
            trials.tick()
            value = float(phi(mid))
            if not math.isfinite(value):
                hi = mid
                continue
            trials.any_finite = True
            if not armijo_ok(mid, value) or value >= phi_lo:
                trials.results[mid] = (armijo_ok(mid, value), False)
                hi = mid
                continue
            c = curvature(mid)
            ok = math.isfinite(c) and abs(c) <= target
            trials.results[mid] = (True, ok)
            if ok:
                return _finish(mid, params, trials, True, True, fallback=False)
            if not math.isfinite(c) or c * (hi - lo) >= 0.0:
                hi = lo
            lo, phi_lo = mid, value
        return None

    prev, phi_prev = 0.0, phi0
    eta = params.initial_step
    try:
        for i in range(params.max_bracket):
            trials.tick()
            value = float(phi(eta))
            if not math.isfinite(value):
                result = zoom(prev, eta, phi_prev)
                return result if result is not None else _fallback(params, trials, "wolfe")
            trials.any_finite = True

            if not armijo_ok(eta, value) or (i > 0 and value >= phi_prev):
                trials.results[eta] = (armijo_ok(eta, value), False)
                result = zoom(prev, eta, phi_prev)
                return result if result is not None else _fallback(params, trials, "wolfe")

            c = curvature(eta)
            ok = math.isfinite(c) and abs(c) <= target
            trials.results[eta] = (True, ok)
            if ok:
                return _finish(eta, params, trials, True, True, fallback=False)
            if not math.isfinite(c) or c >= 0.0:
                result = zoom(eta, prev, value)
                return result if result is not None else _fallback(params, trials, "wolfe")

            prev, phi_prev = eta, value
            eta *= params.expansion
    except _Budget:
        pass
    return _fallback(params, trials, "wolfe")


def curvature_only_search(
    v_next_at: VectorFn,
    v_lag: np.ndarray,
    d_lag: np.ndarray,
    params: WolfeParams,
) -> SearchOutcome:
    """Search for |<v_next(eta), d_lag>| <= -c2 * <v_lag, d_lag>.

    Expands while the slope along ``d_lag`` is still too negative and bisects once it
    overshoots. Sufficient decrease is not part of this condition, so
    ``satisfied_armijo`` is always reported False.

    Args:
        v_next_at: eta -> candidate estimator at the trial point
        v_lag: Estimator at the lagged reference step
        d_lag: Direction at the lagged reference step
        params: Search parameters

    Returns:
        SearchOutcome: Capped step and flags

    Raises:
        ArgumentError: If <v_lag, d_lag> >= 0
        SearchFailureError: If every trial value is non-finite
    """
    descent = float(np.dot(v_lag, d_lag))
    if not descent < 0.0:
        raise ArgumentError(f"lagged direction is not a descent direction: {descent}")
    target = -params.c2 * descent
    trials = _Trials(params.max_bracket + params.max_zoom)

    def slope(eta: float) -> float:
        trials.tick()
        trials.gradient_evals += 1
        value = float(np.dot(v_next_at(eta), d_lag))
        ok = math.isfinite(value) and abs(value) <= target
        if math.isfinite(value):
            trials.any_finite = True
        trials.results[eta] = (False, ok)
        return value

    lo, hi = 0.0, None
    eta = params.initial_step
    try:
        for _ in range(params.max_bracket):
            h = slope(eta)
            if math.isfinite(h) and abs(h) <= target:
                return _finish(eta, params, trials, False, True, fallback=False)
            if math.isfinite(h) and h < -target:
                lo = eta
                eta *= params.expansion
                continue
            hi = eta
            break
        if hi is not None:
            for _ in range(params.max_zoom):
                mid = 0.5 * (lo + hi)
                h = slope(mid)
                if math.isfinite(h) and abs(h) <= target:
                    return _finish(mid, params, trials, False, True, fallback=False)
                if math.isfinite(h) and h < -target:
                    lo = mid
                else:
                    hi = mid
    except _Budget:
        pass
    return _fallback(params, trials, "curvature search")
