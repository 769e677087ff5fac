"""Kernel generalized DWD in a reproducing kernel Hilbert space.

By the representer theorem the fitted function is ``beta0 + sum_i alpha_i K(x, x_i)`` and the penalized problem
becomes::

    min_{beta0, alpha}  (1/n) sum_i w_i V_q(y_i (beta0 + K_i^T alpha)) + lambda alpha^T K alpha

It is solved by the same majorization-minimization scheme as the linear problem, with the kernel matrix in place of
the design matrix.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from gendwd.config import SolverConfig
from gendwd.dataset import Dataset
from gendwd.exceptions import DatasetError
from gendwd.kernels import KernelSpec, cross_kernel, kernel_matrix
from gendwd.linalg import KERNEL_JITTER_LADDER, SystemFactorization, factorize_system
from gendwd.linear import FitReport, descending_order
from gendwd.loss import LossSpec, loss_derivative, loss_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KernelModel:
    """A fitted kernel DWD classifier.

    The model owns a copy of the training inputs, so a saved model can predict on its own.
    """

    beta0: float
    alpha: np.ndarray
    kernel: KernelSpec
    q: float
    lam: float
    train_inputs: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float, copy=True).reshape(-1)
        train_inputs = np.array(self.train_inputs, dtype=float, copy=True)
        if train_inputs.ndim == 1:
            train_inputs = train_inputs.reshape(-1, 1)
        if alpha.shape[0] != train_inputs.shape[0]:
            raise ValueError(
                f"KernelModel has {alpha.shape[0]} dual coefficients for "
                f"{train_inputs.shape[0]} training inputs."
            )
        if not np.isfinite(self.beta0) or not np.all(np.isfinite(alpha)):
            raise ValueError("KernelModel coefficients must be finite.")
        if not np.all(np.isfinite(train_inputs)):
            raise ValueError("KernelModel training inputs must be finite.")
        alpha.setflags(write=False)
        train_inputs.setflags(write=False)
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "train_inputs", train_inputs)

    @property
    def p(self) -> int:
        return self.train_inputs.shape[1]

    def decision_values(self, X_new: np.ndarray) -> np.ndarray:
        return decision_values(self, X_new)


def decision_values(model: KernelModel, X_new: np.ndarray) -> np.ndarray:
    """``beta0 + K(X_new, X_train) alpha``."""
    K_cross = cross_kernel(model.kernel, X_new, model.train_inputs)
    return model.beta0 + K_cross @ model.alpha


def _check_penalty(lam: float) -> None:
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"The penalty lambda must be a positive finite number, got {lam}.")


def _check_gram(data: Dataset, K: np.ndarray) -> None:
    if K.shape != (data.n, data.n):
        raise DatasetError(f"Kernel matrix has shape {K.shape}, expected ({data.n}, {data.n}).")


def _objective_from_fitted(
    spec: LossSpec,
    data: Dataset,
    fitted: np.ndarray,
    K: np.ndarray,
    alpha: np.ndarray,
    lam: float,
) -> float:
    margins = data.y * fitted
    risk = np.dot(data.w, loss_value(spec, margins)) / data.n
    return float(risk + lam * np.dot(alpha, K @ alpha))


def kernel_objective(data: Dataset, model: KernelModel, K: Optional[np.ndarray] = None) -> float:
    """Penalized empirical risk ``(1/n) sum_i w_i V_q(y_i (beta0 + K_i^T alpha)) + lambda alpha^T K alpha``.

    ``data`` must be the sample the model was trained on; ``K`` may be passed to skip recomputing it.
    """
    if model.alpha.shape[0] != data.n:
        raise DatasetError(
            f"Model has {model.alpha.shape[0]} dual coefficients but the data has {data.n} rows."
        )
    if K is None:
        K = kernel_matrix(model.kernel, data.X)
    _check_gram(data, K)
    spec = LossSpec(q=model.q)
    fitted = model.beta0 + K @ model.alpha
    return _objective_from_fitted(spec, data, fitted, K, model.alpha, model.lam)


def kernel_gradient(data: Dataset, model: KernelModel, K: Optional[np.ndarray] = None) -> np.ndarray:
    """Gradient of :func:`kernel_objective` with respect to ``(beta0, alpha)``."""
    if K is None:
        K = kernel_matrix(model.kernel, data.X)
    _check_gram(data, K)
    spec = LossSpec(q=model.q)
    margins = data.y * (model.beta0 + K @ model.alpha)
    z = data.w * data.y * loss_derivative(spec, margins) / data.n
    return np.concatenate([[z.sum()], K @ z + 2.0 * model.lam * (K @ model.alpha)])


def build_kernel_system(
    data: Dataset,
    K: np.ndarray,
    q: float,
    lam: float,
    config: Optional[SolverConfig] = None,
) -> SystemFactorization:
    """Factorize ``[[sum w, 1^T W K], [K W 1, K W K + (2 n q lambda / (q+1)^2) K]]``.

    The lower-right block is singular whenever ``K`` is, so a jitter of ``1e-8 * trace(K) / n`` is always added to
    its diagonal and escalated tenfold up to ``1e-4 * trace(K) / n`` if the factorization still breaks down. The
    jitter only adds a proximal term to the surrogate, so descent and fixed points are unchanged.
    """
    _check_penalty(lam)
    _check_gram(data, K)
    config = config or SolverConfig()
    n = data.n
    Z = np.column_stack([np.ones(n), K])
    matrix = Z.T @ (data.w[:, None] * Z)
    matrix[1:, 1:] += (2.0 * n * q * lam / (q + 1.0) ** 2) * K
    matrix = 0.5 * (matrix + matrix.T)
    mask = np.ones(n + 1, dtype=bool)
    mask[0] = False
    scale = max(float(np.trace(K)) / n, np.finfo(float).tiny)
    return factorize_system(
        matrix,
        scale=scale,
        ladder=KERNEL_JITTER_LADDER,
        jitter_mask=mask,
        base_jitter=config.jitter,
    )


def kernel_mm_step(
    data: Dataset,
    K: np.ndarray,
    current: KernelModel,
    system: SystemFactorization,
) -> KernelModel:
    """One MM update of the kernel problem from ``current``."""
    spec = LossSpec(q=current.q)
    theta = np.concatenate([[current.beta0], current.alpha])
    fitted = current.beta0 + K @ current.alpha
    new = _kernel_update(theta, fitted, K, data, spec, current.lam, system)
    return KernelModel(
        beta0=new[0],
        alpha=new[1:],
        kernel=current.kernel,
        q=current.q,
        lam=current.lam,
        train_inputs=current.train_inputs,
    )


def _kernel_update(
    theta: np.ndarray,
    fitted: np.ndarray,
    K: np.ndarray,
    data: Dataset,
    spec: LossSpec,
    lam: float,
    system: SystemFactorization,
) -> np.ndarray:
    n = data.n
    z = data.w * data.y * loss_derivative(spec, data.y * fitted) / n
    rhs = np.concatenate([[z.sum()], K @ z + 2.0 * lam * (K @ theta[1:])])
    step = n * spec.q / (spec.q + 1.0) ** 2
    return theta - step * system.solve(rhs)


def fit_kernel(
    data: Dataset,
    kernel: KernelSpec,
    q: float,
    lam: float,
    config: Optional[SolverConfig] = None,
    warm: Optional[KernelModel] = None,
    K: Optional[np.ndarray] = None,
) -> tuple[KernelModel, FitReport]:
    """Fit kernel DWD at one penalty value.

    Args:
        data: Training sample with both classes present.
        kernel: Kernel to expand the decision function in.
        q: Loss exponent.
        lam: Penalty on ``alpha^T K alpha``, strictly positive.
        config: Stopping rule.
        warm: Starting point fitted on the same rows.
        K: Precomputed kernel matrix of ``data.X``.

    Returns:
        The fitted model and its :class:`~gendwd.linear.FitReport`.
    """
    data.require_fittable()
    _check_penalty(lam)
    config = config or SolverConfig()
    spec = LossSpec(q=q)
    start = time.perf_counter()

    if K is None:
        K = kernel_matrix(kernel, data.X)
    system = build_kernel_system(data, K, q, lam, config)

    if warm is not None:
        if warm.alpha.shape[0] != data.n:
            raise DatasetError(
                f"Warm start has {warm.alpha.shape[0]} dual coefficients, data has {data.n} rows."
            )
        theta = np.concatenate([[warm.beta0], warm.alpha])
    else:
        theta = np.zeros(data.n + 1)

    fitted = theta[0] + K @ theta[1:]
    trace = [_objective_from_fitted(spec, data, fitted, K, theta[1:], lam)]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iter + 1):  # noqa: B007
        new = _kernel_update(theta, fitted, K, data, spec, lam, system)
        new_fitted = new[0] + K @ new[1:]
        # alpha may drift along near-null directions of K without moving the fit;
        # stop on the intercept and the in-sample fitted values instead.
        change = max(abs(new[0] - theta[0]), float(np.max(np.abs(new_fitted - fitted))))
        theta, fitted = new, new_fitted
        trace.append(_objective_from_fitted(spec, data, fitted, K, theta[1:], lam))
        if change < config.tol:
            converged = True
            break

    model = KernelModel(
        beta0=theta[0], alpha=theta[1:], kernel=kernel, q=q, lam=lam, train_inputs=data.X
    )
    report = FitReport(
        iterations=iterations,
        converged=converged,
        objective_trace=np.asarray(trace),
        final_objective=trace[-1],
        kkt_residual=float(np.max(np.abs(kernel_gradient(data, model, K)))),
        jitter=system.jitter,
        wall_time=time.perf_counter() - start,
    )
    if not converged:
        logger.warning(
            f"Kernel DWD with {kernel.describe()} did not converge within {config.max_iter} "
            f"iterations (q={q}, lambda={lam}); the last iterate is returned."
        )
    logger.debug(
        "kernel fit %s q=%s lambda=%s iterations=%d objective=%.10g",
        kernel.describe(),
        q,
        lam,
        iterations,
        report.final_objective,
    )
    return model, report


def fit_kernel_path(
    data: Dataset,
    kernel: KernelSpec,
    q: float,
    lambdas: Sequence[float],
    config: Optional[SolverConfig] = None,
) -> list[tuple[KernelModel, FitReport]]:
    """Kernel counterpart of :func:`~gendwd.linear.fit_linear_path`; the kernel matrix is built once."""
    order = descending_order(lambdas)
    K = kernel_matrix(kernel, data.X)
    results: list[Optional[tuple[KernelModel, FitReport]]] = [None] * len(order)
    warm: Optional[KernelModel] = None
    for index in order:
        model, report = fit_kernel(data, kernel, q, float(lambdas[index]), config, warm=warm, K=K)
        results[index] = (model, report)
        warm = model
    return [r for r in results if r is not None]
