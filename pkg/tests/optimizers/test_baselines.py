"""
Tests for the fixed-step baseline optimizers and the optimizer registry.
"""

import numpy as np
import pytest

from accproxcg.errors import ArgumentError, DivergenceError, SpecError
from accproxcg.optimizers import (
    BaseOptimizer,
    BASELINES,
    OPTIMIZERS,
    ProxSARAH,
    ProxSpiderBoost,
    ProxSVRGPlus,
    get_optimizer,
    run_prox_sarah,
)
from accproxcg.schemas import OptimizerConfig


def _gradient_descent_objective(problem, eta, steps):
    w = problem.zeros()
    for _ in range(steps):
        w = w - eta * problem.metric_gradient(w)
    return problem.objective(w)


class TestDefaultSettings:
    """Tests for the standard parameter choices at n = 6000, L = 0.7698."""

    N, L = 6000, 0.7698

    def test_prox_sarah(self):
        """Test b, m, gamma and eta of ProxSARAH."""
        # Act
        config = ProxSARAH.default_config(self.N, self.L)

        # Assert
        assert config.batch_size == 15
        assert config.epoch_length == 18
        assert config.gamma == 0.99
        assert config.eta_fixed == pytest.approx(0.41998, abs=1e-5)

    def test_prox_spiderboost(self):
        """Test b = m = floor(sqrt(n)) and eta = 1 / (2L)."""
        # Act
        config = ProxSpiderBoost.default_config(self.N, self.L)

        # Assert
        assert config.batch_size == 77
        assert config.epoch_length == 77
        assert config.gamma == 1.0
        assert config.eta_fixed == pytest.approx(1.0 / (2.0 * self.L))

    def test_prox_svrg_plus(self):
        """Test B = n / 5, b = n^(2/3), m = sqrt(b) and eta = 1 / (6L)."""
        # Act
        config = ProxSVRGPlus.default_config(self.N, self.L)

        # Assert
        assert config.outer_batch == 1200
        assert config.batch_size == 330
        assert config.epoch_length == 18
        assert config.eta_fixed == pytest.approx(1.0 / (6.0 * self.L))

    def test_overrides_and_guards(self):
        """Test explicit overrides and the (n, L) guard."""
        # Act
        config = ProxSARAH.default_config(self.N, self.L, epochs=3, seed=4)

        # Assert
        assert config.epochs == 3
        assert config.seed == 4
        with pytest.raises(ArgumentError):
            ProxSARAH.default_config(0, self.L)
        with pytest.raises(ArgumentError):
            ProxSVRGPlus.default_config(100, 0.0)

    def test_tiny_problem(self):
        """Test that small n keeps every size at least 1 and b at most n."""
        # Act
        config = ProxSVRGPlus.default_config(3, 4.0)

        # Assert
        assert 1 <= config.batch_size <= 3
        assert config.epoch_length >= 1
        assert config.outer_batch == 1


class TestFixedStepRuns:
    """Tests for the baseline epoch loops."""

    def test_spiderboost_full_batch_is_gradient_descent(self, quadratic):
        """Test that b = n and lam = 0 reduce to gradient descent at eta = 1 / (2L)."""
        # Arrange
        problem, _ = quadratic
        eta = 1.0 / (2.0 * 1.5)
        config = OptimizerConfig(
            epochs=1, epoch_length=6, batch_size=problem.n, gamma=1.0, eta_fixed=eta
        )

        # Act
        trace = ProxSpiderBoost(config).run(problem)

        # Assert
        expected = _gradient_descent_objective(problem, eta, 6)
        assert trace.final.objective == pytest.approx(expected, rel=1e-9)

    def test_svrg_plus_full_anchor_is_gradient_descent(self, quadratic):
        """Test that full anchor and inner batches give exact gradients."""
        # Arrange
        problem, _ = quadratic
        config = OptimizerConfig(
            epochs=2,
            epoch_length=3,
            batch_size=problem.n,
            outer_batch=problem.n,
            gamma=1.0,
            eta_fixed=0.4,
        )

        # Act
        trace = ProxSVRGPlus(config).run(problem)

        # Assert
        expected = _gradient_descent_objective(problem, 0.4, 6)
        assert trace.final.objective == pytest.approx(expected, rel=1e-9)

    def test_prox_sarah_gradient_accounting(self, sigmoid_problem):
        """Test passes = 1 + 2b(m - 1) / n per epoch."""
        # Arrange
        b, m, n = 8, 6, sigmoid_problem.n
        config = ProxSARAH.default_config(
            n, sigmoid_problem.lipschitz, batch_size=b, epoch_length=m, epochs=3
        )

        # Act
        trace = ProxSARAH(config).run(sigmoid_problem)

        # Assert
        for prev, cur in zip(trace.records, trace.records[1:]):
            assert cur.effective_passes - prev.effective_passes == pytest.approx(
                1.0 + 2 * b * (m - 1) / n
            )
        assert trace.final.ls_calls == 0

    def test_svrg_plus_gradient_accounting(self, sigmoid_problem):
        """Test passes = (B + 2b(m - 1)) / n per epoch with a sampled anchor."""
        # Arrange
        B, b, m, n = 40, 5, 4, sigmoid_problem.n
        config = OptimizerConfig(
            epochs=2, epoch_length=m, batch_size=b, outer_batch=B, gamma=1.0, eta_fixed=0.2
        )

        # Act
        trace = ProxSVRGPlus(config).run(sigmoid_problem)

        # Assert
        for prev, cur in zip(trace.records, trace.records[1:]):
            assert cur.effective_passes - prev.effective_passes == pytest.approx(
                (B + 2 * b * (m - 1)) / n
            )

    @pytest.mark.parametrize("name", BASELINES)
    def test_default_runs_make_progress(self, sigmoid_problem, name):
        """Test that every baseline lowers the objective with its standard settings."""
        # Arrange
        cls = OPTIMIZERS[name]
        config = cls.default_config(sigmoid_problem.n, sigmoid_problem.lipschitz, epochs=5)

        # Act
        trace = get_optimizer(name, config).run(sigmoid_problem)

        # Assert
        assert trace.status == "completed"
        assert trace.final.objective < trace.records[0].objective

    def test_divergence_carries_trace(self, quadratic):
        """Test that an exploding objective raises with the trace so far."""
        # Arrange
        problem, _ = quadratic
        config = OptimizerConfig(
            epochs=3, epoch_length=5, batch_size=problem.n, gamma=0.99, eta_fixed=100.0
        )

        # Act
        with pytest.raises(DivergenceError) as exc_info:
            ProxSARAH(config).run(problem)

        # Assert
        trace = exc_info.value.trace
        assert trace is not None
        assert trace.status == "failed"
        assert [r.epoch for r in trace.records] == [0, 1]
        assert "diverged at epoch 1" in trace.error

    def test_requires_fixed_step(self):
        """Test that eta_fixed is mandatory."""
        with pytest.raises(ArgumentError):
            ProxSARAH(OptimizerConfig(epoch_length=3, batch_size=2))

    def test_convenience_runner(self, small_dataset):
        """Test the run_* entry point on a dataset."""
        # Arrange
        config = ProxSARAH.default_config(small_dataset.n, 4.0, epochs=2)

        # Act
        trace = run_prox_sarah(config, small_dataset, "lorenz", 0.0)

        # Assert
        assert trace.algorithm == "prox_sarah"
        assert np.isfinite(trace.final.objective)


class _JumpAway(BaseOptimizer):
    """Moves every epoch to a fixed point far from the start."""

    name = "jump_away"

    def __init__(self, config, target):
        super().__init__(config)
        self.target = target

    def _epoch(self, problem, w, epoch):
        return self.target.copy()


class TestDivergenceGuard:
    """Tests for the objective-explosion threshold."""

    def test_threshold_is_relative_to_small_start(self, quadratic):
        """Test that a start with P0 far below 1 still trips the guard."""
        # Arrange: objective grows by (10 / 1e-6)^2 = 1e14 while staying well below 1e8
        problem, w_star = quadratic
        ones = np.ones(problem.d)
        w0 = w_star + 1e-6 * ones
        target = w_star + 10.0 * ones
        assert problem.objective(w0) < 1.0
        assert problem.objective(target) < 1e8
        config = OptimizerConfig(epochs=2, epoch_length=1, batch_size=1)

        # Act
        with pytest.raises(DivergenceError) as exc_info:
            _JumpAway(config, target).run(problem, w0=w0)

        # Assert
        assert [r.epoch for r in exc_info.value.trace.records] == [0, 1]

    def test_moderate_growth_is_allowed(self, quadratic):
        """Test that growth below the factor completes the run."""
        # Arrange: objective grows by (1e-3 / 1e-6)^2 = 1e6 < 1e8
        problem, w_star = quadratic
        ones = np.ones(problem.d)
        config = OptimizerConfig(epochs=2, epoch_length=1, batch_size=1)

        # Act
        trace = _JumpAway(config, w_star + 1e-3 * ones).run(problem, w0=w_star + 1e-6 * ones)

        # Assert
        assert trace.status == "completed"


class TestRegistry:
    """Tests for the optimizer registry."""

    def test_names(self):
        """Test the registered algorithm names."""
        assert set(OPTIMIZERS) == {
            "acc_prox_cg_sarah",
            "acc_prox_cg_sarah_rs",
            "acc_prox_cg_sarah_st",
            "prox_sarah",
            "prox_spiderboost",
            "prox_svrg_plus",
        }

    def test_unknown_name(self):
        """Test that unknown names raise a spec error listing the known ones."""
        # Arrange
        config = OptimizerConfig(epoch_length=2, batch_size=1)

        # Act & Assert
        with pytest.raises(SpecError) as exc_info:
            get_optimizer("prox_adam", config)
        assert "acc_prox_cg_sarah" in str(exc_info.value)
