import logging
from unittest.mock import patch

import numpy as np
import pytest
from scipy.linalg import null_space

from gendwd import kernel_dwd
from gendwd.config import SolverConfig
from gendwd.exceptions import DatasetError
from gendwd.kernel_dwd import (
    KernelModel,
    build_kernel_system,
    fit_kernel,
    fit_kernel_path,
    kernel_gradient,
    kernel_mm_step,
    kernel_objective,
)
from gendwd.kernels import KernelSpec, kernel_matrix
from gendwd.linear import fit_linear
from gendwd.loss import LossSpec
from gendwd.oracle import gd_solve_penalized
from gendwd.verify import random_instance

TIGHT = SolverConfig(tol=1e-10)


@pytest.fixture
def data():
    return random_instance(np.random.default_rng(5), 30, 2)


@pytest.mark.parametrize(
    "kernel",
    [KernelSpec.gaussian(0.5), KernelSpec.polynomial(offset=1.0, degree=2), KernelSpec.linear()],
    ids=lambda k: k.describe(),
)
def test_fit_converges_and_descends(data, kernel):
    model, report = fit_kernel(data, kernel, 1.0, 0.1)
    assert report.converged
    assert np.all(np.diff(report.objective_trace) <= 1e-12)
    assert report.final_objective == pytest.approx(kernel_objective(data, model), rel=1e-10)
    assert report.jitter > 0


@pytest.mark.parametrize("q", [0.5, 1.0, 8.0])
def test_gaussian_fit_matches_gradient_descent_oracle(data, q):
    kernel = KernelSpec.gaussian(0.5)
    model, _ = fit_kernel(data, kernel, q, 0.05, TIGHT)
    reference = gd_solve_penalized(data, q, 0.05, mode="kernel", kernel=kernel)
    assert kernel_objective(data, model) == pytest.approx(reference.objective, abs=1e-6)
    np.testing.assert_allclose(
        model.decision_values(data.X), reference.decision_values(data.X), atol=1e-4
    )


def test_gaussian_fit_reaches_a_stationary_point(data):
    kernel = KernelSpec.gaussian(0.5)
    _, report = fit_kernel(data, kernel, 1.0, 0.05, TIGHT)
    K = kernel_matrix(kernel, data.X)
    system = build_kernel_system(data, K, 1.0, 0.05)
    scale = LossSpec(q=1.0).lipschitz * np.max(np.sum(np.abs(system.matrix), axis=1)) / data.n
    assert report.kkt_residual <= 10 * TIGHT.tol * scale


@pytest.mark.parametrize("q", [0.5, 1.0, 4.0])
def test_linear_kernel_reproduces_linear_fit(q):
    data = random_instance(np.random.default_rng(9), 40, 3)
    linear_model, _ = fit_linear(data, q, 0.1, TIGHT)
    kernel_model, _ = fit_kernel(data, KernelSpec.linear(), q, 0.1, TIGHT)
    np.testing.assert_allclose(
        kernel_model.decision_values(data.X), linear_model.decision_values(data.X), atol=1e-4
    )
    # the implied primal coefficients are X^T alpha
    np.testing.assert_allclose(data.X.T @ kernel_model.alpha, linear_model.beta, atol=1e-4)


def test_mm_step_does_not_increase_objective(data):
    kernel = KernelSpec.gaussian(1.0)
    K = kernel_matrix(kernel, data.X)
    start = KernelModel(
        beta0=0.5,
        alpha=np.random.default_rng(1).standard_normal(data.n),
        kernel=kernel,
        q=2.0,
        lam=0.1,
        train_inputs=data.X,
    )
    after = kernel_mm_step(data, K, start, build_kernel_system(data, K, 2.0, 0.1))
    assert kernel_objective(data, after, K) <= kernel_objective(data, start, K) + 1e-12


def test_gradient_vanishes_at_the_optimum(data):
    kernel = KernelSpec.gaussian(0.5)
    model, _ = fit_kernel(data, kernel, 1.0, 0.1, TIGHT)
    assert np.max(np.abs(kernel_gradient(data, model))) < 1e-6


def test_null_space_directions_leave_the_fit_unchanged():
    # a linear Gram matrix over 30 points in 2 dimensions has a 28-dimensional null space
    data = random_instance(np.random.default_rng(8), 30, 2)
    kernel = KernelSpec.linear()
    K = kernel_matrix(kernel, data.X)
    model, _ = fit_kernel(data, kernel, 1.0, 0.1, TIGHT)
    direction = null_space(data.X.T)[:, 0]
    np.testing.assert_allclose(K @ direction, 0.0, atol=1e-10)

    moved = KernelModel(
        beta0=model.beta0,
        alpha=model.alpha + 3.0 * direction,
        kernel=kernel,
        q=model.q,
        lam=model.lam,
        train_inputs=model.train_inputs,
    )
    assert kernel_objective(data, moved, K) == pytest.approx(
        kernel_objective(data, model, K), abs=1e-10
    )
    np.testing.assert_allclose(
        moved.decision_values(data.X), model.decision_values(data.X), atol=1e-10
    )


def test_path_builds_the_kernel_matrix_once(data):
    kernel = KernelSpec.gaussian(0.5)
    with patch.object(kernel_dwd, "kernel_matrix", wraps=kernel_matrix) as spy:
        path = fit_kernel_path(data, kernel, 1.0, [0.01, 1.0, 0.1])
    assert spy.call_count == 1
    assert [model.lam for model, _ in path] == [0.01, 1.0, 0.1]
    assert all(report.converged for _, report in path)


def test_path_matches_cold_fits(data):
    kernel = KernelSpec.gaussian(0.5)
    path = fit_kernel_path(data, kernel, 1.0, [1.0, 0.1], TIGHT)
    for model, _ in path:
        cold, _ = fit_kernel(data, kernel, 1.0, model.lam, TIGHT)
        np.testing.assert_allclose(
            model.decision_values(data.X), cold.decision_values(data.X), atol=1e-5
        )


def test_decision_values_check_dimensions(data):
    model, _ = fit_kernel(data, KernelSpec.gaussian(0.5), 1.0, 0.1)
    assert model.p == 2
    assert model.decision_values(data.X[0]).shape == (1,)
    with pytest.raises(DatasetError):
        model.decision_values(np.zeros((2, 5)))


def test_kernel_model_validation():
    with pytest.raises(ValueError, match="3 dual coefficients for 2 training inputs"):
        KernelModel(
            beta0=0.0,
            alpha=np.zeros(3),
            kernel=KernelSpec.linear(),
            q=1.0,
            lam=0.1,
            train_inputs=np.zeros((2, 2)),
        )
    with pytest.raises(ValueError, match="finite"):
        KernelModel(
            beta0=np.nan,
            alpha=np.zeros(2),
            kernel=KernelSpec.linear(),
            q=1.0,
            lam=0.1,
            train_inputs=np.zeros((2, 2)),
        )


def test_kernel_model_owns_frozen_training_inputs(data):
    X = data.X.copy()
    model = KernelModel(
        beta0=0.0,
        alpha=np.zeros(data.n),
        kernel=KernelSpec.linear(),
        q=1.0,
        lam=0.1,
        train_inputs=X,
    )
    X[0, 0] = 100.0
    assert model.train_inputs[0, 0] != 100.0
    assert not model.train_inputs.flags.writeable


def test_warm_start_dimension_mismatch(data):
    warm = KernelModel(
        beta0=0.0,
        alpha=np.zeros(3),
        kernel=KernelSpec.linear(),
        q=1.0,
        lam=0.1,
        train_inputs=np.zeros((3, 2)),
    )
    with pytest.raises(DatasetError, match="Warm start"):
        fit_kernel(data, KernelSpec.linear(), 1.0, 0.1, warm=warm)


def test_precomputed_kernel_matrix_shape_is_checked(data):
    with pytest.raises(DatasetError, match="Kernel matrix has shape"):
        fit_kernel(data, KernelSpec.linear(), 1.0, 0.1, K=np.eye(3))


def test_rejects_nonpositive_penalty(data):
    with pytest.raises(ValueError, match="positive finite"):
        fit_kernel(data, KernelSpec.linear(), 1.0, 0.0)


def test_nonconvergence_logs_a_warning(data, caplog):
    with caplog.at_level(logging.WARNING, logger="gendwd.kernel_dwd"):
        _, report = fit_kernel(data, KernelSpec.gaussian(0.5), 1.0, 0.01, SolverConfig(max_iter=1))
    assert not report.converged
    assert "did not converge" in caplog.text
