"""
Accelerated proximal stochastic conjugate-gradient optimizers built on SARAH.

Three variants share one epoch loop:

- ``AccProxCGSarah``: the first direction of an epoch is the negative last estimator of
  the previous epoch; every inner step is a conjugate step with a strong-Wolfe search.
- ``AccProxCGSarahRS``: deterministic restart, the first direction of every epoch is the
  exact negative full gradient.
- ``AccProxCGSarahST``: conjugate steps and curvature-only searches every t steps,
  plain SARAH steps with a fixed step size in between.

Every step is a proximal step along the direction followed by the momentum average
w_{k+1} = (1 - gamma) * w_k + gamma * prox(w_k + eta * d_k).
"""

from typing import Optional

import numpy as np

from accproxcg.data_io.sampling import BatchIndex, BatchSampler
from accproxcg.directions import EstimatorState, compute_beta, direction_update, sarah_update
from accproxcg.errors import ArgumentError
from accproxcg.linesearch import curvature_only_search, wolfe_search
from accproxcg.losses import FiniteSumProblem
from accproxcg.optimizers.base import BaseOptimizer, BatchLine
from accproxcg.schemas import OptimizerConfig, OutputMode, SearchOutcome, WolfeParams


class AccProxCGSarah(BaseOptimizer):
    """Acc-Prox-CG-SARAH.

    The epoch closes with h := v_{m-1} (the last computed estimator) and outputs w_m, or
    an inner iterate drawn uniformly when ``output_mode`` is ``uniform``.
    """

    name = "acc_prox_cg_sarah"
    restart_each_epoch = False

    def __init__(self, config: OptimizerConfig):
        super().__init__(config)
        self._h: Optional[np.ndarray] = None
        self._batches: Optional[BatchSampler] = None

    def _prepare(self, problem: FiniteSumProblem, w0: np.ndarray) -> None:
        self._h = None
        self._batches = self._sampler(problem)

    def _initial_direction(self, v0: np.ndarray) -> np.ndarray:
        if self.restart_each_epoch or self._h is None:
            return -v0
        return -self._h

    def _descent_guard(self, v: np.ndarray, d: np.ndarray) -> np.ndarray:
        if float(np.dot(v, d)) >= 0.0 and np.any(v):
            self.stats.ascent_resets += 1
            self.logger.debug("Ascent direction replaced by -v")
            return -v
        return d

    def _record_search(self, outcome: SearchOutcome, line: BatchLine) -> float:
        self.stats.ls_calls += 1
        self.stats.epoch_search_evals += line.gradient_evals
        if outcome.fallback_used:
            self.stats.fallback_count += 1
            self.logger.debug(
                f"Search fallback to eta2 (armijo={outcome.satisfied_armijo}, "
                f"curvature={outcome.satisfied_curvature})"
            )
        return outcome.eta

    def _wolfe_step(
        self,
        problem: FiniteSumProblem,
        batch: BatchIndex,
        w: np.ndarray,
        d: np.ndarray,
        v: np.ndarray,
        grad0: Optional[np.ndarray],
        params: WolfeParams,
    ) -> float:
        if not float(np.dot(v, d)) < 0.0:
            # v = 0: nothing to search along
            return params.eta2
        line = BatchLine(problem, batch, w, d, v, grad0=grad0)
        outcome = wolfe_search(line.phi, line.dphi, line.v_next, v, d, params)
        return self._record_search(outcome, line)

    def _first_step_size(
        self,
        problem: FiniteSumProblem,
        w0: np.ndarray,
        d0: np.ndarray,
        v0: np.ndarray,
        params: WolfeParams,
    ) -> float:
        # the k = 0 search runs on its own batch; its gradient at w0 is search cost
        return self._wolfe_step(problem, self._batches.draw(), w0, d0, v0, None, params)

    def _direction(self, state: EstimatorState, v: np.ndarray, k: int) -> np.ndarray:
        v_ref, d_ref = state.reference(1)
        beta, restarted = compute_beta(self.config.beta_formula, v, v_ref)
        if restarted:
            self.stats.restarts += 1
        return self._descent_guard(v, direction_update(v, beta, d_ref))

    def _inner_step_size(
        self,
        problem: FiniteSumProblem,
        state: EstimatorState,
        batch: BatchIndex,
        w: np.ndarray,
        grad_cur: np.ndarray,
        params: WolfeParams,
        k: int,
    ) -> float:
        return self._wolfe_step(problem, batch, w, state.d_cur, state.v_cur, grad_cur, params)

    def _epoch(self, problem: FiniteSumProblem, w: np.ndarray, epoch: int) -> np.ndarray:
        cfg = self.config
        params = cfg.wolfe_params()
        m = cfg.epoch_length
        pick = int(self.rng.integers(1, m + 1)) if cfg.output_mode is OutputMode.UNIFORM else m
        chosen = None

        w0 = w
        v0 = problem.full_gradient(w0)
        d0 = self._descent_guard(v0, self._initial_direction(v0))
        state = EstimatorState(lag=max(1, cfg.switch_frequency or 1))
        state.start_epoch(v0, d0)

        eta = self._first_step_size(problem, w0, d0, v0, params)
        self.stats.observe_step(eta)
        w_prev, w = w0, self._step(problem, w0, d0, eta, cfg.gamma)
        if pick == 1:
            chosen = w

        for k in range(1, m):
            batch = self._batches.draw()
            grad_cur = problem.gradient(w, batch)
            grad_prev = problem.gradient(w_prev, batch)
            v = sarah_update(state.v_cur, grad_cur, grad_prev)
            self.stats.observe_ratio(v, state.v_cur)

            state.record(v, self._direction(state, v, k))
            eta = self._inner_step_size(problem, state, batch, w, grad_cur, params, k)
            self.stats.observe_step(eta)
            w_prev, w = w, self._step(problem, w, state.d_cur, eta, cfg.gamma)
            if pick == k + 1:
                chosen = w

        self._h = state.v_cur
        if cfg.track_deviation:
            gap = state.v_cur - problem.metric_gradient(w_prev)
            self.stats.sigma_sq = max(self.stats.sigma_sq, float(np.dot(gap, gap)))
        return w if chosen is None else chosen


class AccProxCGSarahRS(AccProxCGSarah):
    """Acc-Prox-CG-SARAH-RS: every epoch starts from d_0 = -grad f(w_0)."""

    name = "acc_prox_cg_sarah_rs"
    restart_each_epoch = True


class AccProxCGSarahST(AccProxCGSarah):
    """Acc-Prox-CG-SARAH-ST, the switching variant.

    With switching frequency t: step k uses d_k = -v_k + beta_k * d_{k-t} when k is a
    multiple of t and d_k = -v_k otherwise. A curvature-only search runs at step k when
    k + 1 is a multiple of t and a conjugate step follows in the same epoch; every other
    step uses ``eta_fixed``.
    """

    name = "acc_prox_cg_sarah_st"

    def __init__(self, config: OptimizerConfig):
        if config.switch_frequency is None or config.eta_fixed is None:
            raise ArgumentError("the switching variant needs switch_frequency and eta_fixed")
        super().__init__(config)
        self.t = config.switch_frequency
        self.eta_f = config.eta_fixed

    def _first_step_size(self, problem, w0, d0, v0, params) -> float:
        return self.eta_f

    def _direction(self, state: EstimatorState, v: np.ndarray, k: int) -> np.ndarray:
        if k % self.t != 0:
            return -v
        v_ref, d_ref = state.reference(self.t)
        beta, restarted = compute_beta(self.config.beta_formula, v, v_ref)
        if restarted:
            self.stats.restarts += 1
        return self._descent_guard(v, direction_update(v, beta, d_ref))

    def _inner_step_size(self, problem, state, batch, w, grad_cur, params, k) -> float:
        if (k + 1) % self.t != 0 or k + 1 > self.config.epoch_length - 1:
            return self.eta_f
        v_lag, d_lag = state.reference(self.t)
        if not float(np.dot(v_lag, d_lag)) < 0.0:
            return self.eta_f
        line = BatchLine(problem, batch, w, state.d_cur, state.v_cur, grad0=grad_cur)
        outcome = curvature_only_search(line.v_next, v_lag, d_lag, params)
        return self._record_search(outcome, line)
