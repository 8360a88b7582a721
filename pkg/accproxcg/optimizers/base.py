"""
Base optimizer class for accproxcg.

This module defines the base class every optimizer inherits from. It owns the outer
epoch loop, metric recording, the divergence guard and run messages, so subclasses only
implement one epoch.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from accproxcg.data_io.sampling import BatchIndex, BatchSampler
from accproxcg.errors import ArgumentError, DivergenceError
from accproxcg.losses import FiniteSumProblem
from accproxcg.prox_map import gradient_mapping, momentum_combine, prox_step
from accproxcg.schemas import EpochRecord, MessageType, OptimizerConfig, RunTrace


@dataclass
class RunStats:
    """Counters and empirical diagnostics accumulated over one run."""

    ls_calls: int = 0
    fallback_count: int = 0
    epoch_search_evals: int = 0
    beta_hat: float = 0.0
    eta1: Optional[float] = None
    sigma_sq: float = 0.0
    restarts: int = 0
    ascent_resets: int = 0

    def observe_step(self, eta: float) -> None:
        self.eta1 = eta if self.eta1 is None else min(self.eta1, eta)

    def observe_ratio(self, v_cur: np.ndarray, v_prev: np.ndarray) -> None:
        denom = float(np.dot(v_prev, v_prev))
        if denom > 0.0:
            self.beta_hat = max(self.beta_hat, float(np.dot(v_cur, v_cur)) / denom)


class BatchLine:
    """The smooth objective along w + eta * d on one fixed mini-batch.

    Batch gradients at trial points are cached and counted once. ``grad0`` may be passed
    in when the caller already holds the batch gradient at w.
    """

    def __init__(
        self,
        problem: FiniteSumProblem,
        batch: BatchIndex,
        w: np.ndarray,
        d: np.ndarray,
        v: np.ndarray,
        grad0: Optional[np.ndarray] = None,
    ):
        self.problem = problem
        self.batch = batch
        self.w = w
        self.d = d
        self.v = v
        self.gradient_evals = 0
        self._grads: Dict[float, np.ndarray] = {}
        if grad0 is not None:
            self._grads[0.0] = grad0
        self.grad0 = self.grad(0.0)

    def point(self, eta: float) -> np.ndarray:
        return self.w + eta * self.d

    def phi(self, eta: float) -> float:
        return self.problem.loss(self.point(eta), self.batch)

    def grad(self, eta: float) -> np.ndarray:
        if eta not in self._grads:
            self._grads[eta] = self.problem.gradient(self.point(eta), self.batch)
            self.gradient_evals += 1
        return self._grads[eta]

    def dphi(self, eta: float) -> float:
        return float(np.dot(self.grad(eta), self.d))

    def v_next(self, eta: float) -> np.ndarray:
        return self.grad(eta) - self.grad0 + self.v


class BaseOptimizer(ABC):
    """Base class for all optimizers in accproxcg.

    Subclasses implement ``_epoch``; ``run`` wraps it with logging, metric records,
    the divergence guard and error handling.
    """

    name: str = "base"

    def __init__(self, config: OptimizerConfig):
        """Initialize the optimizer.

        Args:
            config: Optimizer configuration
        """
        self.config = config
        self.logger = logging.getLogger(f"accproxcg.optimizers.{self.__class__.__name__}")
        self.stats = RunStats()
        self.rng = np.random.default_rng(config.seed)

    @abstractmethod
    def _epoch(self, problem: FiniteSumProblem, w: np.ndarray, epoch: int) -> np.ndarray:
        """Run one outer epoch from w and return the epoch output point."""

    def _prepare(self, problem: FiniteSumProblem, w0: np.ndarray) -> None:
        """Hook run once before the first epoch."""

    def _sampler(self, problem: FiniteSumProblem, b: Optional[int] = None) -> BatchSampler:
        return BatchSampler(problem.n, b or self.config.batch_size, self.rng)

    def _config_echo(self, problem: FiniteSumProblem) -> Dict[str, object]:
        return self.config.model_dump(mode="json")

    def run(self, problem: FiniteSumProblem, w0: Optional[np.ndarray] = None) -> RunTrace:
        """Run the optimizer for ``config.epochs`` epochs.

        Args:
            problem: Problem to minimize; its gradient counter is reset
            w0: Starting point, zero vector by default

        Returns:
            RunTrace: Epoch-0 record followed by one record per epoch

        Raises:
            DivergenceError: Objective became non-finite or exploded; carries the trace
        """
        self.stats = RunStats()
        self.rng = np.random.default_rng(self.config.seed)
        problem.grad_evals = 0

        w = problem.zeros() if w0 is None else np.array(w0, dtype=np.float64)
        if w.shape != (problem.d,):
            raise ArgumentError(f"w0 has shape {w.shape}, expected ({problem.d},)")

        trace = RunTrace(algorithm=self.name, config=self._config_echo(problem))
        self.logger.info(f"Starting {self.name} on {problem.name}")
        self._add_message(trace, MessageType.INFO, f"{self.name} started on {problem.name}")

        started = time.perf_counter()
        first = self._record(problem, w, 0, trace, started)
        # relative to |P0|; a start at P0 = 0 falls back to the bare factor
        scale = abs(first.objective) if first.objective != 0.0 else 1.0
        limit = self.config.divergence_factor * scale
        self._prepare(problem, w)

        try:
            for epoch in range(1, self.config.epochs + 1):
                self.stats.epoch_search_evals = 0
                w = self._epoch(problem, w, epoch)
                record = self._record(problem, w, epoch, trace, started)
                self.logger.info(
                    f"epoch {epoch}: P={record.objective:.6e} gmap^2={record.gmap_sq:.3e} "
                    f"passes={record.effective_passes:.2f}"
                )
                if not np.isfinite(record.objective) or record.objective > limit:
                    raise DivergenceError(
                        f"{self.name} diverged at epoch {epoch}: P={record.objective}"
                    )
        except DivergenceError as e:
            self._finish(trace)
            trace.status = "failed"
            trace.error = str(e)
            self.logger.error(f"Error during run: {e}")
            self._add_message(trace, MessageType.ERROR, f"Error in {self.name}: {e}")
            raise DivergenceError(str(e), trace=trace) from e

        self._finish(trace)
        trace.status = "completed"
        self._add_message(trace, MessageType.SUCCESS, f"{self.name} completed successfully")
        self.logger.info(f"Completed {self.name}")
        return trace

    def _record(
        self,
        problem: FiniteSumProblem,
        w: np.ndarray,
        epoch: int,
        trace: RunTrace,
        started: float,
    ) -> EpochRecord:
        gmap = gradient_mapping(
            w, self.config.metric_eta, problem.metric_gradient(w), problem.regularizer
        )
        record = EpochRecord(
            epoch=epoch,
            objective=problem.objective(w),
            gmap_sq=float(np.dot(gmap, gmap)),
            effective_passes=problem.effective_passes(),
            ls_calls=self.stats.ls_calls,
            fallback_count=self.stats.fallback_count,
            search_gradient_evals=self.stats.epoch_search_evals if epoch else 0,
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        trace.records.append(record)
        return record

    def _finish(self, trace: RunTrace) -> None:
        trace.beta_hat = self.stats.beta_hat
        trace.eta1 = self.stats.eta1
        trace.sigma_sq = self.stats.sigma_sq
        trace.restarts = self.stats.restarts
        trace.ascent_resets = self.stats.ascent_resets

    def _step(
        self, problem: FiniteSumProblem, w: np.ndarray, d: np.ndarray, eta: float, gamma: float
    ) -> np.ndarray:
        """Proximal step along d followed by the momentum average."""
        y = prox_step(w, d, eta, problem.regularizer)
        return momentum_combine(w, y, gamma)

    def _add_message(self, trace: RunTrace, message_type: MessageType, content: str) -> None:
        trace.add_message(self.name, message_type, content)
