"""Linear generalized DWD fitted by majorization-minimization.

The penalized problem is::

    min_{beta0, beta}  (1/n) sum_i w_i V_q(y_i (beta0 + x_i^T beta)) + lambda beta^T beta

Each MM update minimizes the quadratic surrogate obtained by expanding every loss term with curvature ``M``.
The surrogate's system matrix depends only on ``(X, w, q, lambda)``, so it is factorized once per penalty value
and reused by every update at that value.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from gendwd.config import SolverConfig
from gendwd.dataset import Dataset
from gendwd.exceptions import DatasetError
from gendwd.linalg import LINEAR_JITTER_LADDER, SystemFactorization, factorize_system
from gendwd.loss import LossSpec, loss_derivative, loss_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Intercept and coefficients of a linear DWD fit, with the ``(q, lambda)`` it was fit with."""

    beta0: float
    beta: np.ndarray
    q: float
    lam: float

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float, copy=True).reshape(-1)
        if not np.isfinite(self.beta0) or not np.all(np.isfinite(beta)):
            raise ValueError("LinearModel coefficients must be finite.")
        beta.setflags(write=False)
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        """``beta0 + X beta`` for every row of ``X``."""
        X = _as_matrix(X)
        if X.shape[1] != self.p:
            raise DatasetError(f"Model expects {self.p} features, got {X.shape[1]}.")
        return self.beta0 + X @ self.beta


@dataclass
class FitReport:
    """Diagnostics of one MM run.

    Attributes:
        iterations: Number of MM updates performed.
        converged: Whether the coefficient change fell below the tolerance before ``max_iter``.
        objective_trace: Objective at the starting point followed by its value after every update.
        final_objective: Objective at the returned coefficients.
        kkt_residual: Infinity norm of the objective gradient at the returned coefficients.
        jitter: Diagonal jitter used to factorize the system matrix.
        wall_time: Seconds spent in the solver.
    """

    iterations: int
    converged: bool
    objective_trace: np.ndarray = field(repr=False)
    final_objective: float
    kkt_residual: float
    jitter: float = 0.0
    wall_time: float = 0.0


def _as_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DatasetError(f"Expected a 2-d feature matrix, got {X.ndim} dimensions.")
    return X


def _check_penalty(lam: float) -> None:
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"The penalty lambda must be a positive finite number, got {lam}.")


def _check_dimensions(data: Dataset, model: LinearModel) -> None:
    if model.p != data.p:
        raise DatasetError(f"Model has {model.p} coefficients but the data has {data.p} features.")


def _design(data: Dataset) -> np.ndarray:
    return np.column_stack([np.ones(data.n), data.X])


def _objective_from_margins(
    spec: LossSpec, margins: np.ndarray, w: np.ndarray, beta: np.ndarray, lam: float
) -> float:
    return float(np.dot(w, loss_value(spec, margins)) / margins.shape[0] + lam * np.dot(beta, beta))


def objective(data: Dataset, model: LinearModel) -> float:
    """Penalized empirical risk ``(1/n) sum_i w_i V_q(y_i f(x_i)) + lambda ||beta||^2``."""
    _check_dimensions(data, model)
    spec = LossSpec(q=model.q)
    margins = data.y * model.decision_values(data.X)
    return _objective_from_margins(spec, margins, data.w, model.beta, model.lam)


def gradient(data: Dataset, model: LinearModel) -> np.ndarray:
    """Gradient of :func:`objective` with respect to ``(beta0, beta)``."""
    _check_dimensions(data, model)
    spec = LossSpec(q=model.q)
    margins = data.y * model.decision_values(data.X)
    z = data.w * data.y * loss_derivative(spec, margins) / data.n
    grad = _design(data).T @ z
    grad[1:] += 2.0 * model.lam * model.beta
    return grad


def build_system_inverse(
    data: Dataset, q: float, lam: float, config: Optional[SolverConfig] = None
) -> SystemFactorization:
    """Factorize the MM system matrix for one penalty value.

    The matrix is ``[[sum w, 1^T W X], [X^T W 1, X^T W X + (2 n lambda / M) I]]``. It is positive definite for
    ``lambda > 0``; the escalating jitter only engages on numerical breakdown and is logged when it does.
    """
    _check_penalty(lam)
    config = config or SolverConfig()
    spec = LossSpec(q=q)
    Z = _design(data)
    matrix = Z.T @ (data.w[:, None] * Z)
    ridge = 2.0 * data.n * lam / spec.lipschitz
    matrix[1:, 1:] += ridge * np.eye(data.p)
    scale = float(np.mean(np.diag(matrix)))
    return factorize_system(
        matrix, scale=scale, ladder=LINEAR_JITTER_LADDER, base_jitter=config.jitter
    )


def _mm_update(
    theta: np.ndarray,
    margins: np.ndarray,
    Z: np.ndarray,
    data: Dataset,
    spec: LossSpec,
    lam: float,
    system: SystemFactorization,
) -> np.ndarray:
    n = data.n
    z = data.w * data.y * loss_derivative(spec, margins) / n
    rhs = Z.T @ z
    rhs[1:] += 2.0 * lam * theta[1:]
    return theta - (n / spec.lipschitz) * system.solve(rhs)


def mm_step(data: Dataset, current: LinearModel, system: SystemFactorization) -> LinearModel:
    """One MM update from ``current``; the objective never increases.

    ``system`` must come from :func:`build_system_inverse` with the same data, ``q`` and ``lambda``.
    """
    _check_dimensions(data, current)
    spec = LossSpec(q=current.q)
    Z = _design(data)
    theta = np.concatenate([[current.beta0], current.beta])
    margins = data.y * (Z @ theta)
    new = _mm_update(theta, margins, Z, data, spec, current.lam, system)
    return LinearModel(beta0=new[0], beta=new[1:], q=current.q, lam=current.lam)


def fit_linear(
    data: Dataset,
    q: float,
    lam: float,
    config: Optional[SolverConfig] = None,
    warm: Optional[LinearModel] = None,
) -> tuple[LinearModel, FitReport]:
    """Fit the linear generalized DWD at one penalty value.

    Args:
        data: Training sample with both classes present.
        q: Loss exponent.
        lam: Ridge penalty, strictly positive.
        config: Stopping rule; defaults to :class:`SolverConfig` defaults.
        warm: Starting point. All-zero coefficients when omitted.

    Returns:
        The fitted model and its :class:`FitReport`. Hitting ``max_iter`` is flagged in the report, not raised.
    """
    data.require_fittable()
    _check_penalty(lam)
    config = config or SolverConfig()
    spec = LossSpec(q=q)
    start = time.perf_counter()

    system = build_system_inverse(data, q, lam, config)
    Z = _design(data)
    if warm is not None:
        if warm.p != data.p:
            raise DatasetError(f"Warm start has {warm.p} coefficients, data has {data.p} features.")
        theta = np.concatenate([[warm.beta0], warm.beta])
    else:
        theta = np.zeros(data.p + 1)

    margins = data.y * (Z @ theta)
    trace = [_objective_from_margins(spec, margins, data.w, theta[1:], lam)]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iter + 1):  # noqa: B007
        new = _mm_update(theta, margins, Z, data, spec, lam, system)
        change = float(np.max(np.abs(new - theta)))
        theta = new
        margins = data.y * (Z @ theta)
        trace.append(_objective_from_margins(spec, margins, data.w, theta[1:], lam))
        if change < config.tol:
            converged = True
            break

    model = LinearModel(beta0=theta[0], beta=theta[1:], q=q, lam=lam)
    report = FitReport(
        iterations=iterations,
        converged=converged,
        objective_trace=np.asarray(trace),
        final_objective=trace[-1],
        kkt_residual=float(np.max(np.abs(gradient(data, model)))),
        jitter=system.jitter,
        wall_time=time.perf_counter() - start,
    )
    if not converged:
        logger.warning(
            f"Linear DWD did not converge within {config.max_iter} iterations "
            f"(q={q}, lambda={lam}); the last iterate is returned."
        )
    logger.debug(
        "linear fit q=%s lambda=%s iterations=%d objective=%.10g",
        q,
        lam,
        iterations,
        report.final_objective,
    )
    return model, report


def descending_order(lambdas: Sequence[float]) -> list[int]:
    """Indices that visit ``lambdas`` from largest to smallest, stable for ties."""
    values = [float(v) for v in lambdas]
    if not values:
        raise ValueError("The lambda path must contain at least one value.")
    for value in values:
        _check_penalty(value)
    return sorted(range(len(values)), key=lambda i: -values[i])


def fit_linear_path(
    data: Dataset,
    q: float,
    lambdas: Sequence[float],
    config: Optional[SolverConfig] = None,
) -> list[tuple[LinearModel, FitReport]]:
    """Fit every penalty value, largest first, warm-starting each fit from the previous one.

    The returned list follows the order of ``lambdas``.
    """
    order = descending_order(lambdas)
    results: list[Optional[tuple[LinearModel, FitReport]]] = [None] * len(order)
    warm: Optional[LinearModel] = None
    for index in order:
        model, report = fit_linear(data, q, float(lambdas[index]), config, warm=warm)
        results[index] = (model, report)
        warm = model
    return [r for r in results if r is not None]
