"""
Unit tests for the margin losses and finite-sum problems.

This module tests:
- Loss values and gradient coefficients at known points
- Gradient correctness against central finite differences
- The smoothness constants
- Batch and full objective evaluation and gradient counting
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from accproxcg.data_io import BatchIndex, SparseDataset
from accproxcg.errors import ArgumentError
from accproxcg.losses import (
    LeastSquaresProblem,
    LossKind,
    LossModel,
    MarginLossProblem,
    batch_gradient,
    batch_loss,
    full_objective,
    lipschitz_constant,
    loss_grad_coeff,
    loss_value,
)

ALL_KINDS = list(LossKind)


def _random_dataset(rng, n=15, d=5):
    dense = rng.standard_normal((n, d)) * (rng.random((n, d)) < 0.7)
    dense[:, 0] = rng.standard_normal(n)
    norms = np.linalg.norm(dense, axis=1, keepdims=True)
    return SparseDataset(
        features=sp.csr_matrix(dense / norms),
        labels=np.where(rng.random(n) < 0.5, 1.0, -1.0),
    )


class TestLossValues:
    """Tests for loss_value and loss_grad_coeff at known points."""

    @pytest.mark.parametrize(
        "kind,u,expected",
        [
            (LossKind.LORENZ, 1.0, 0.0),
            (LossKind.LORENZ, 3.0, 0.0),
            (LossKind.NORMALIZED_SIGMOID, 0.0, 1.0),
            (LossKind.TWO_LAYER_NN, 0.0, 0.25),
            (LossKind.LOGISTIC_DIFFERENCE, 0.0, 0.3798854930417224),
        ],
    )
    def test_values(self, kind, u, expected):
        """Test loss values at reference margins."""
        assert loss_value(kind, u) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize(
        "kind,u,expected",
        [
            (LossKind.LORENZ, 1.0, 0.0),
            (LossKind.LORENZ, 2.5, 0.0),
            (LossKind.NORMALIZED_SIGMOID, 0.0, -1.0),
            (LossKind.TWO_LAYER_NN, 0.0, -0.25),
        ],
    )
    def test_coefficients(self, kind, u, expected):
        """Test gradient coefficients at reference margins."""
        assert loss_grad_coeff(kind, u) == pytest.approx(expected, abs=1e-12)

    def test_scalar_in_scalar_out(self):
        """Test that a scalar margin returns a float and arrays keep their shape."""
        # Act
        scalar = loss_value(LossKind.LORENZ, 0.5)
        array = loss_value(LossKind.LORENZ, np.array([0.5, 2.0]))

        # Assert
        assert isinstance(scalar, float)
        assert array.shape == (2,)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_nan_margin_rejected(self, kind):
        """Test the NaN guard."""
        with pytest.raises(ArgumentError):
            loss_value(kind, math.nan)
        with pytest.raises(ArgumentError):
            loss_grad_coeff(kind, np.array([0.0, math.nan]))

    def test_sigmoid_stable_for_large_margins(self):
        """Test that large margins do not overflow."""
        # Act
        values = loss_value(LossKind.NORMALIZED_SIGMOID, np.array([-800.0, 800.0]))
        coeffs = loss_grad_coeff(LossKind.NORMALIZED_SIGMOID, np.array([-800.0, 800.0]))

        # Assert
        assert values[0] == pytest.approx(2.0)
        assert values[1] == 0.0
        assert np.all(np.isfinite(coeffs))

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_coefficient_matches_finite_difference(self, kind, rng):
        """Test g(u) against central differences of the loss value."""
        # Arrange
        u = rng.uniform(-10.0, 10.0, size=10000)
        h = 1e-6

        # Act
        fd = (loss_value(kind, u + h) - loss_value(kind, u - h)) / (2.0 * h)
        g = loss_grad_coeff(kind, u)

        # Assert
        assert np.max(np.abs(g - fd) / np.maximum(1.0, np.abs(g))) < 1e-6

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_empirical_smoothness(self, kind, rng):
        """Test |g(u) - g(u')| <= L |u - u'| on random pairs."""
        # Arrange
        u = rng.uniform(-10.0, 10.0, size=10000)
        v = rng.uniform(-10.0, 10.0, size=10000)
        L = lipschitz_constant(kind)

        # Act
        gap = np.abs(loss_grad_coeff(kind, u) - loss_grad_coeff(kind, v))

        # Assert
        assert np.all(gap <= L * np.abs(u - v) + 1e-9)

    def test_lipschitz_constants(self):
        """Test the constant lookup."""
        assert lipschitz_constant(LossKind.LORENZ) == 4.0
        assert lipschitz_constant("normalized_sigmoid") == 0.7698
        assert lipschitz_constant(LossKind.LOGISTIC_DIFFERENCE) == 0.092372
        assert LossModel.of(LossKind.TWO_LAYER_NN).lipschitz == 0.15405


class TestBatchEvaluation:
    """Tests for batch_loss, batch_gradient and full_objective."""

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_gradient_matches_finite_difference(self, kind, rng):
        """Test the full gradient entry-wise against central differences on 100 draws."""
        for _ in range(100):
            # Arrange
            ds = _random_dataset(rng)
            w = rng.standard_normal(ds.d)
            h = 1e-6

            # Act
            grad = batch_gradient(ds, kind, w)
            fd = np.array(
                [
                    (batch_loss(ds, kind, w + h * e) - batch_loss(ds, kind, w - h * e)) / (2 * h)
                    for e in np.eye(ds.d)
                ]
            )

            # Assert
            assert np.max(np.abs(grad - fd) / np.maximum(1.0, np.abs(grad))) < 1e-6

    def test_zero_weights(self, small_dataset):
        """Test the losses at w = 0 on any batch."""
        # Arrange
        w = np.zeros(small_dataset.d)
        batch = BatchIndex(indices=np.array([3, 17, 42]))

        # Act & Assert
        assert batch_loss(small_dataset, LossKind.NORMALIZED_SIGMOID, w, batch) == pytest.approx(1.0)
        assert batch_loss(small_dataset, LossKind.TWO_LAYER_NN, w, batch) == pytest.approx(0.25)
        assert full_objective(small_dataset, LossKind.NORMALIZED_SIGMOID, w, 0.3) == pytest.approx(1.0)

    def test_singleton_batch(self, small_dataset, rng):
        """Test that a singleton batch is the loss of that example."""
        # Arrange
        w = rng.standard_normal(small_dataset.d)
        i = 11
        u = small_dataset.labels[i] * float((small_dataset.features[i] @ w)[0])

        # Act
        value = batch_loss(small_dataset, LossKind.LORENZ, w, BatchIndex(indices=np.array([i])))

        # Assert
        assert value == pytest.approx(loss_value(LossKind.LORENZ, u), rel=1e-14)

    def test_union_of_disjoint_batches(self, small_dataset, rng):
        """Test that the gradient over a union is the size-weighted mean."""
        # Arrange
        w = rng.standard_normal(small_dataset.d)
        first = BatchIndex(indices=np.array([0, 5, 9]))
        second = BatchIndex(indices=np.array([20, 21]))
        union = BatchIndex(indices=np.array([0, 5, 9, 20, 21]))
        kind = LossKind.LOGISTIC_DIFFERENCE

        # Act
        g1 = batch_gradient(small_dataset, kind, w, first)
        g2 = batch_gradient(small_dataset, kind, w, second)
        g = batch_gradient(small_dataset, kind, w, union)

        # Assert
        np.testing.assert_allclose(g, (3 * g1 + 2 * g2) / 5, rtol=1e-12, atol=1e-15)

    def test_lorenz_flat_region(self):
        """Test that the Lorenz gradient vanishes once every margin exceeds 1."""
        # Arrange
        ds = SparseDataset(
            features=sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]])),
            labels=np.array([1.0, -1.0]),
        )
        w = np.array([2.0, -2.0])

        # Act
        grad = batch_gradient(ds, LossKind.LORENZ, w)

        # Assert
        assert np.array_equal(grad, np.zeros(2))

    def test_one_example_objective(self):
        """Test P(w) = f(w) + lam * ||w||_1 on one example."""
        # Arrange
        ds = SparseDataset(features=sp.csr_matrix(np.array([[1.0]])), labels=np.array([1.0]))

        # Act
        value = full_objective(ds, LossKind.NORMALIZED_SIGMOID, np.zeros(1), 0.5)

        # Assert
        assert value == pytest.approx(1.0)

    def test_invalid_arguments(self, small_dataset):
        """Test the argument guards."""
        # Arrange
        w = np.zeros(small_dataset.d)

        # Act & Assert
        with pytest.raises(ArgumentError):
            full_objective(small_dataset, LossKind.LORENZ, w, -1.0)
        with pytest.raises(ArgumentError):
            batch_loss(small_dataset, LossKind.LORENZ, w, BatchIndex(indices=np.array([], dtype=int)))
        with pytest.raises(ArgumentError):
            batch_gradient(small_dataset, LossKind.LORENZ, np.zeros(small_dataset.d + 1))


class TestProblems:
    """Tests for the finite-sum problem objects."""

    def test_gradient_counting(self, sigmoid_problem):
        """Test that counted calls add individual gradients and metrics are free."""
        # Arrange
        w = sigmoid_problem.zeros()
        batch = BatchIndex(indices=np.array([1, 2, 3, 4]))

        # Act
        sigmoid_problem.gradient(w, batch)
        sigmoid_problem.full_gradient(w)
        sigmoid_problem.metric_gradient(w)
        sigmoid_problem.objective(w)
        sigmoid_problem.loss(w, batch)

        # Assert
        assert sigmoid_problem.grad_evals == 4 + sigmoid_problem.n
        assert sigmoid_problem.effective_passes() == pytest.approx(1.0 + 4 / sigmoid_problem.n)

    def test_margin_problem_properties(self, small_dataset):
        """Test the problem wiring."""
        # Act
        problem = MarginLossProblem(small_dataset, "lorenz", lam=0.1)

        # Assert
        assert problem.lipschitz == 4.0
        assert problem.lam == 0.1
        assert problem.name.endswith("/lorenz")
        assert problem.objective(np.ones(problem.d)) == pytest.approx(
            full_objective(small_dataset, LossKind.LORENZ, np.ones(problem.d), 0.1)
        )

    def test_example_gradients_average_to_full(self, sigmoid_problem, rng):
        """Test that per-example gradients average to the full gradient."""
        # Arrange
        w = rng.standard_normal(sigmoid_problem.d)

        # Act
        rows = sigmoid_problem.example_gradients(w)

        # Assert
        assert rows.shape == (sigmoid_problem.n, sigmoid_problem.d)
        np.testing.assert_allclose(rows.mean(axis=0), sigmoid_problem.metric_gradient(w), atol=1e-12)

    def test_least_squares(self, quadratic):
        """Test the quadratic problem at and away from its minimizer."""
        # Arrange
        problem, w_star = quadratic

        # Act & Assert
        assert problem.objective(w_star) == pytest.approx(0.0, abs=1e-20)
        assert np.linalg.norm(problem.metric_gradient(w_star)) < 1e-12
        hessian = problem.A.T @ problem.A / problem.n
        assert np.allclose(np.linalg.eigvalsh(hessian)[[0, -1]], [1.0, 1.5])
        with pytest.raises(ArgumentError):
            LeastSquaresProblem(np.eye(3), np.zeros(2))
