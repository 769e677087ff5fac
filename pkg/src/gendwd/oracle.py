"""Reference computations used to verify the solvers.

Nothing here calls into the solver modules: the loss, the kernels and the objectives are re-implemented directly
from their definitions, and the optimizers are plain gradient descent and exhaustive angle search.
They are meant for small instances only.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from gendwd.datagen import BayesOracle
from gendwd.dataset import Dataset
from gendwd.kernels import KernelKind, KernelSpec
from gendwd.loss import LossSpec, population_minimizer

logger = logging.getLogger(__name__)

GD_TOLERANCE = 1e-8
GD_MAX_ITER = 1_000_000
ARMIJO_FRACTION = 1e-4
DEFAULT_ANGLES = 100_000
GOLDEN_ITERATIONS = 80
ANGLE_CHUNK = 2_000
MIN_MONTE_CARLO = 1_000
FISHER_STEP = 1e-4
FISHER_RANGE = 10.0


def _reference_loss(u: np.ndarray, q: float) -> np.ndarray:
    t = q / (q + 1.0)
    safe = np.maximum(u, t)
    return np.where(u <= t, 1.0 - u, (t**q / (q + 1.0)) * safe ** (-q))


def _reference_derivative(u: np.ndarray, q: float) -> np.ndarray:
    t = q / (q + 1.0)
    safe = np.maximum(u, t)
    return np.where(u <= t, -1.0, -((t / safe) ** (q + 1.0)))


def _reference_kernel(kernel: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    inner = np.einsum("ik,jk->ij", A, B)
    if kernel.kind == KernelKind.LINEAR:
        return inner
    if kernel.kind == KernelKind.POLYNOMIAL:
        return (kernel.offset + inner) ** kernel.degree
    diff = A[:, None, :] - B[None, :, :]
    return np.exp(-kernel.sigma * np.einsum("ijk,ijk->ij", diff, diff))


@dataclass
class OracleSolution:
    """Reference optimum of the penalized problem."""

    beta0: float
    coefficients: np.ndarray
    objective: float
    iterations: int
    gradient_norm: float
    kernel: Optional[KernelSpec] = None
    train_inputs: Optional[np.ndarray] = None

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kernel is None:
            return self.beta0 + X @ self.coefficients
        return self.beta0 + _reference_kernel(self.kernel, X, self.train_inputs) @ self.coefficients


def _kernel_square_root(K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Symmetric root of K and its pseudo-inverse; eigenvalues below the cutoff count as zero.
    eigenvalues, vectors = np.linalg.eigh(0.5 * (K + K.T))
    cutoff = K.shape[0] * np.finfo(float).eps * max(float(eigenvalues[-1]), 1.0)
    root = np.sqrt(np.clip(eigenvalues, 0.0, None))
    inverse = np.divide(1.0, root, out=np.zeros_like(root), where=eigenvalues > cutoff)
    return (vectors * root) @ vectors.T, (vectors * inverse) @ vectors.T


def gd_solve_penalized(
    data: Dataset,
    q: float,
    lam: float,
    mode: Literal["linear", "kernel"] = "linear",
    kernel: Optional[KernelSpec] = None,
    tol: float = GD_TOLERANCE,
    max_iter: int = GD_MAX_ITER,
) -> OracleSolution:
    """Minimize the penalized DWD objective by gradient descent with Barzilai-Borwein trial steps and Armijo
    backtracking, until the infinity norm of the objective gradient is at most ``tol``.

    Kernel mode descends over ``u = K^(1/2) alpha``, where the problem is ridge-penalized and linear in the
    basis ``K^(1/2)``; ``alpha`` comes back through the pseudo-inverse root. The stopping test uses the gradient
    with respect to ``alpha``, which is ``K^(1/2)`` times the gradient in ``u``.

    Raises:
        RuntimeError: If ``max_iter`` iterations do not reach ``tol``.
    """
    if mode == "kernel" and kernel is None:
        raise ValueError("Kernel mode needs a kernel.")
    X, y, w, n = data.X, data.y, data.w, data.n
    if mode == "kernel":
        gram = _reference_kernel(kernel, X, X)
        basis, inverse_root = _kernel_square_root(gram)
    else:
        gram = inverse_root = None
        basis = X

    def value_and_grad(theta: np.ndarray) -> tuple[float, np.ndarray]:
        u = y * (theta[0] + basis @ theta[1:])
        value = float(np.sum(w * _reference_loss(u, q)) / n) + lam * float(theta[1:] @ theta[1:])
        z = w * y * _reference_derivative(u, q) / n
        grad = np.concatenate([[z.sum()], basis.T @ z + 2.0 * lam * theta[1:]])
        return value, grad

    def stopping_norm(grad: np.ndarray) -> float:
        if gram is None:
            return float(np.max(np.abs(grad)))
        return max(abs(float(grad[0])), float(np.max(np.abs(basis @ grad[1:]))))

    theta = np.zeros(basis.shape[1] + 1)
    value, grad = value_and_grad(theta)
    step = 1.0
    iterations = 0
    while stopping_norm(grad) > tol:
        if iterations >= max_iter:
            raise RuntimeError(
                f"Gradient descent oracle did not reach gradient norm {tol} in {max_iter} iterations."
            )
        iterations += 1
        slack = 10.0 * np.finfo(float).eps * max(1.0, abs(value))
        gg = float(grad @ grad)
        while True:
            candidate = theta - step * grad
            new_value, new_grad = value_and_grad(candidate)
            if new_value <= value - ARMIJO_FRACTION * step * gg + slack or step < 1e-30:
                break
            step *= 0.5
        s = candidate - theta
        r = new_grad - grad
        sr = float(s @ r)
        theta, value, grad = candidate, new_value, new_grad
        step = float(s @ s) / sr if sr > 0 else 2.0 * step

    if gram is None:
        return OracleSolution(
            beta0=float(theta[0]),
            coefficients=theta[1:],
            objective=value,
            iterations=iterations,
            gradient_norm=stopping_norm(grad),
        )
    alpha = inverse_root @ theta[1:]
    margins = y * (theta[0] + gram @ alpha)
    risk = float(np.sum(w * _reference_loss(margins, q)) / n)
    objective = risk + lam * float(alpha @ gram @ alpha)
    return OracleSolution(
        beta0=float(theta[0]),
        coefficients=alpha,
        objective=objective,
        iterations=iterations,
        gradient_norm=stopping_norm(grad),
        kernel=kernel,
        train_inputs=X.copy(),
    )


def _optimal_slack_level(q: float, c: float) -> float:
    return (q / c) ** (1.0 / (q + 1.0))


def _slack_loss(v: np.ndarray, q: float, c: float) -> np.ndarray:
    # Per-point objective after minimizing out the slack in closed form.
    s = _optimal_slack_level(q, c)
    safe = np.maximum(v, s)
    return np.where(v > s, safe ** (-q), s ** (-q) + c * (s - v))


def constrained_objective(
    data: Dataset, q: float, c: float, omega0: float, omega: np.ndarray
) -> float:
    """Constrained generalized DWD objective ``sum_i w_i (1 / d_i^q + c eta_i)`` at the optimal slacks.

    ``omega`` is normalized first, so any nonzero direction may be passed.
    """
    if c <= 0:
        raise ValueError(f"The budget c must be positive, got {c}.")
    omega = np.asarray(omega, dtype=float)
    norm = np.linalg.norm(omega)
    if norm == 0:
        raise ValueError("The direction omega must be nonzero.")
    v = data.y * (omega0 + data.X @ (omega / norm))
    return float(np.sum(data.w * _slack_loss(v, q, c)))


def constrained_solve_2d(
    data: Dataset, q: float, c: float, n_angles: int = DEFAULT_ANGLES
) -> tuple[float, np.ndarray, float]:
    """Exhaustive solution of the constrained problem in two dimensions.

    Every direction ``(cos t, sin t)`` on an ``n_angles`` grid gets its intercept by golden-section search (the
    objective is convex in the intercept); the best grid point is returned as ``(omega0, omega, objective)``.
    """
    if data.p != 2:
        raise ValueError(f"The constrained oracle needs p=2, got p={data.p}.")
    if c <= 0:
        raise ValueError(f"The budget c must be positive, got {c}.")
    X, y, w = data.X, data.y, data.w
    s = _optimal_slack_level(q, c)
    radius = float(np.max(np.linalg.norm(X, axis=1)))
    bound = 10.0 * (radius + s + 1.0)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0

    def total(omega0: np.ndarray, proj: np.ndarray) -> np.ndarray:
        v = y[:, None] * (omega0[None, :] + proj)
        return w @ _slack_loss(v, q, c)

    best = (math.inf, 0.0, 0.0)
    angles = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    for start in range(0, n_angles, ANGLE_CHUNK):
        theta = angles[start : start + ANGLE_CHUNK]
        proj = X @ np.vstack([np.cos(theta), np.sin(theta)])
        a = np.full(theta.shape, -bound)
        b = np.full(theta.shape, bound)
        lo = b - invphi * (b - a)
        hi = a + invphi * (b - a)
        f_lo, f_hi = total(lo, proj), total(hi, proj)
        for _ in range(GOLDEN_ITERATIONS):
            left = f_lo < f_hi
            b = np.where(left, hi, b)
            a = np.where(left, a, lo)
            probe = np.where(left, b - invphi * (b - a), a + invphi * (b - a))
            f_probe = total(probe, proj)
            hi, f_hi, lo, f_lo = (
                np.where(left, lo, probe),
                np.where(left, f_lo, f_probe),
                np.where(left, probe, hi),
                np.where(left, f_probe, f_hi),
            )
        omega0 = 0.5 * (a + b)
        values = total(omega0, proj)
        k = int(np.argmin(values))
        if values[k] < best[0]:
            best = (float(values[k]), float(omega0[k]), float(theta[k]))

    objective, omega0, angle = best
    if abs(omega0) > (1.0 - 1e-6) * bound:
        logger.warning(
            f"Constrained oracle optimum omega0={omega0:.6g} sits at the search "
            f"bracket {bound:.6g}."
        )
    return omega0, np.array([math.cos(angle), math.sin(angle)]), objective


@dataclass
class MonteCarloEstimate:
    rate: float
    standard_error: float
    n: int


def bayes_error_mc(
    oracle: BayesOracle,
    n_mc: int = 100_000,
    seed: int = 0,
    classifier: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> MonteCarloEstimate:
    """Misclassification rate on fresh balanced mixture draws, with its binomial standard error.

    ``classifier`` maps points to labels; the Bayes rule of ``oracle`` is used when omitted.
    """
    if n_mc < MIN_MONTE_CARLO:
        raise ValueError(f"Use at least {MIN_MONTE_CARLO} Monte Carlo points, got {n_mc}.")
    n_mc += n_mc % 2
    sample = oracle.sample(n_mc, seed)
    rule = classifier or oracle.classify
    rate = float(np.mean(np.asarray(rule(sample.X)) != sample.y))
    standard_error = math.sqrt(rate * (1.0 - rate) / n_mc)
    return MonteCarloEstimate(rate=rate, standard_error=standard_error, n=n_mc)


def fisher_grid_check(
    q: float, eta_grid: Sequence[float], step: float = FISHER_STEP, f_range: float = FISHER_RANGE
) -> float:
    """Largest gap between the grid minimizer of the conditional risk and the closed-form minimizer."""
    eta = np.asarray(eta_grid, dtype=float)
    if np.any((eta <= 0) | (eta >= 1) | (eta == 0.5)):
        raise ValueError("eta values must lie in (0, 1) and differ from 0.5.")
    f = np.arange(-f_range, f_range + step / 2, step)
    loss_pos = _reference_loss(f, q)
    loss_neg = _reference_loss(-f, q)
    risk = eta[:, None] * loss_pos[None, :] + (1.0 - eta[:, None]) * loss_neg[None, :]
    grid_minimizers = f[np.argmin(risk, axis=1)]
    closed_form = np.asarray(population_minimizer(LossSpec(q=q), eta))
    return float(np.max(np.abs(grid_minimizers - closed_form)))
