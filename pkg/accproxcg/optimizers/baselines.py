"""
Baseline optimizers for accproxcg.

Fixed-step variance-reduced proximal methods used as comparison points:

- ``ProxSARAH``: SARAH estimator, proximal step, momentum average.
- ``ProxSpiderBoost``: SARAH estimator and proximal step without momentum.
- ``ProxSVRGPlus``: SVRG estimator anchored at a large outer batch.

All three read the step size from ``eta_fixed``; ``default_config`` fills in the
standard parameter choices for a problem of size n and smoothness L.
"""

import math
from typing import Any, Dict

import numpy as np

from accproxcg.data_io.sampling import integer_cube_root
from accproxcg.directions import sarah_update
from accproxcg.errors import ArgumentError
from accproxcg.losses import FiniteSumProblem
from accproxcg.optimizers.base import BaseOptimizer
from accproxcg.schemas import OptimizerConfig


class _FixedStepOptimizer(BaseOptimizer):
    """Shared setup of the fixed-step baselines."""

    def __init__(self, config: OptimizerConfig):
        if config.eta_fixed is None:
            raise ArgumentError(f"{self.name} needs eta_fixed")
        super().__init__(config)
        self.eta = config.eta_fixed

    @classmethod
    def default_settings(cls, n: int, L: float) -> Dict[str, Any]:
        raise NotImplementedError

    @classmethod
    def default_config(cls, n: int, L: float, **overrides: Any) -> OptimizerConfig:
        """Configuration with the standard parameter choices for (n, L)."""
        if n < 1 or L <= 0:
            raise ArgumentError(f"need n >= 1 and L > 0, got n={n}, L={L}")
        settings = cls.default_settings(n, L)
        settings.update(overrides)
        return OptimizerConfig(**settings)

    def _prepare(self, problem: FiniteSumProblem, w0: np.ndarray) -> None:
        self._batches = self._sampler(problem, min(self.config.batch_size, problem.n))


class ProxSARAH(_FixedStepOptimizer):
    """ProxSARAH with eta = 2 / (4 + L * gamma) and gamma = 0.99."""

    name = "prox_sarah"
    momentum = True

    @classmethod
    def default_settings(cls, n: int, L: float) -> Dict[str, Any]:
        gamma = 0.99
        c = 2.0 / (3.0 * L * L * gamma * gamma)
        return {
            "gamma": gamma,
            "eta_fixed": 2.0 / (4.0 + L * gamma),
            "batch_size": max(1, min(n, math.floor(n ** (1.0 / 3.0) / c))),
            "epoch_length": max(1, integer_cube_root(n)),
        }

    def _epoch(self, problem: FiniteSumProblem, w: np.ndarray, epoch: int) -> np.ndarray:
        gamma = self.config.gamma if self.momentum else 1.0
        v = problem.full_gradient(w)
        w_prev, w = w, self._step(problem, w, -v, self.eta, gamma)
        for _ in range(1, self.config.epoch_length):
            batch = self._batches.draw()
            v = sarah_update(v, problem.gradient(w, batch), problem.gradient(w_prev, batch))
            w_prev, w = w, self._step(problem, w, -v, self.eta, gamma)
        return w


class ProxSpiderBoost(ProxSARAH):
    """Prox-SpiderBoost: b = m = floor(sqrt(n)), eta = 1 / (2L), no momentum."""

    name = "prox_spiderboost"
    momentum = False

    @classmethod
    def default_settings(cls, n: int, L: float) -> Dict[str, Any]:
        root = max(1, math.floor(math.sqrt(n)))
        return {
            "gamma": 1.0,
            "eta_fixed": 1.0 / (2.0 * L),
            "batch_size": root,
            "epoch_length": root,
        }


class ProxSVRGPlus(_FixedStepOptimizer):
    """ProxSVRG+: outer batch B = n/5, inner b = n^(2/3), m = sqrt(b), eta = 1 / (6L)."""

    name = "prox_svrg_plus"

    @classmethod
    def default_settings(cls, n: int, L: float) -> Dict[str, Any]:
        b = max(1, min(n, math.floor(n ** (2.0 / 3.0))))
        return {
            "gamma": 1.0,
            "eta_fixed": 1.0 / (6.0 * L),
            "outer_batch": max(1, n // 5),
            "batch_size": b,
            "epoch_length": max(1, math.floor(math.sqrt(b))),
        }

    def _prepare(self, problem: FiniteSumProblem, w0: np.ndarray) -> None:
        super()._prepare(problem, w0)
        outer = self.config.outer_batch or problem.n
        self._outer = None if outer >= problem.n else self._sampler(problem, outer)

    def _epoch(self, problem: FiniteSumProblem, w: np.ndarray, epoch: int) -> np.ndarray:
        anchor = w
        if self._outer is None:
            anchor_grad = problem.full_gradient(anchor)
        else:
            anchor_grad = problem.gradient(anchor, self._outer.draw())

        w = self._step(problem, anchor, -anchor_grad, self.eta, 1.0)
        for _ in range(1, self.config.epoch_length):
            batch = self._batches.draw()
            v = problem.gradient(w, batch) - problem.gradient(anchor, batch) + anchor_grad
            w = self._step(problem, w, -v, self.eta, 1.0)
        return w
