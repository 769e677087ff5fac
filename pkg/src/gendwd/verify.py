"""Oracle-backed self checks, grouped in families that can be run separately.

Every check is deterministic given the seed. ``lipschitz_scale`` multiplies the curvature of the quadratic surrogate
in the majorization sweep; values below one must make that check fail.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from gendwd.config import SolverConfig, get_num_threads
from gendwd.datagen import gen_mixture
from gendwd.dataset import Dataset
from gendwd.kernel_dwd import build_kernel_system, fit_kernel, kernel_objective
from gendwd.kernels import KernelSpec, kernel_matrix
from gendwd.linear import build_system_inverse, fit_linear, objective
from gendwd.loss import (
    LossSpec,
    check_majorization,
    hinge_loss,
    loss_derivative,
    loss_value,
)
from gendwd.model import predict, to_constrained
from gendwd.oracle import (
    bayes_error_mc,
    constrained_objective,
    constrained_solve_2d,
    fisher_grid_check,
    gd_solve_penalized,
)

logger = logging.getLogger(__name__)

Q_VALUES = (0.5, 1.0, 4.0, 8.0)
VERIFY_TOL = 1e-10
OBJECTIVE_ATOL = 1e-6
DECISION_ATOL = 1e-4
DESCENT_SLACK = 1e-12
FISHER_ATOL = 1e-3
CONSTRAINED_RTOL = 1e-3
FD_STEP = 1e-6
FD_RTOL = 1e-5
FD_KINK_RADIUS = 1e-5
FD_KINK_ATOL = 1e-3
FAMILIES = ("loss", "fisher", "linear", "kernel", "constrained", "bayes")


@dataclass
class CheckResult:
    family: str
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _check(
    family: str, name: str, deviation: float, tolerance: float, detail: str = ""
) -> CheckResult:
    deviation = float(deviation)
    return CheckResult(
        family=family,
        name=name,
        passed=bool(np.isfinite(deviation) and deviation <= tolerance),
        deviation=deviation,
        tolerance=tolerance,
        detail=detail,
    )


def random_instance(rng: np.random.Generator, n: int, p: int, noise: float = 1.0) -> Dataset:
    """Noisy linearly separable-ish data with both classes guaranteed."""
    X = rng.standard_normal((n, p))
    y = np.where(X[:, 0] + noise * rng.standard_normal(n) >= 0, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    return Dataset(X=X, y=y)


def _central_difference(spec: LossSpec, u: np.ndarray) -> np.ndarray:
    upper = np.asarray(loss_value(spec, u + FD_STEP))
    return (upper - np.asarray(loss_value(spec, u - FD_STEP))) / (2 * FD_STEP)


def _loss_checks(seed: int, lipschitz_scale: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for q in Q_VALUES:
        spec = LossSpec(q=q)
        t0 = spec.threshold
        near = t0 + np.array([0.0, 1e-3, 1e-2, 0.05])
        grid = np.concatenate([np.linspace(-3.0, 5.0, 161), near])
        t, t_tilde = np.meshgrid(grid, grid)
        ok = check_majorization(spec, t, t_tilde, lipschitz=lipschitz_scale * spec.lipschitz)
        results.append(
            _check("loss", f"majorization q={q}", float(np.count_nonzero(~ok)), 0.0, "violations")
        )

        u = rng.uniform(-3.0, 5.0, size=500)
        points = np.concatenate([u, t0 + np.array([-8e-6, -1e-6, 0.0, 1e-6, 8e-6])])
        slope = np.abs(loss_derivative(spec, points))
        gap = np.abs(_central_difference(spec, points) - loss_derivative(spec, points))
        # the derivative is bounded away from zero on any finite interval
        away = np.abs(points - t0) > FD_KINK_RADIUS
        results.append(
            _check(
                "loss",
                f"finite-difference derivative q={q}",
                np.max(gap[away] / slope[away]),
                FD_RTOL,
                "relative",
            )
        )
        results.append(
            _check(
                "loss",
                f"finite-difference derivative near threshold q={q}",
                np.max(gap[~away]),
                FD_KINK_ATOL,
            )
        )

        a, b = rng.uniform(-3.0, 5.0, size=(2, 500))
        slope_gap = np.abs(loss_derivative(spec, a) - loss_derivative(spec, b))
        excess = slope_gap - spec.lipschitz * np.abs(a - b)
        results.append(_check("loss", f"lipschitz bound q={q}", max(np.max(excess), 0.0), 1e-12))

        gap = np.asarray(loss_value(spec, 0.5 * (a + b))) - 0.5 * (
            np.asarray(loss_value(spec, a)) + np.asarray(loss_value(spec, b))
        )
        results.append(_check("loss", f"convexity q={q}", max(np.max(gap), 0.0), 1e-12))

        sorted_u = np.sort(u)
        rises = np.diff(np.asarray(loss_value(spec, sorted_u)))
        results.append(_check("loss", f"nonincreasing q={q}", max(np.max(rises), 0.0), 1e-12))

    u = np.linspace(-2.0, 3.0, 2001)
    for q in (10.0, 100.0, 1000.0):
        gap = np.max(np.abs(np.asarray(loss_value(LossSpec(q=q), u)) - hinge_loss(u)))
        results.append(_check("loss", f"hinge limit q={q:g}", gap, 1.0 / (q + 1.0) + 1e-12))
    return results


def _fisher_checks(seed: int, lipschitz_scale: float) -> list[CheckResult]:
    eta = np.round(np.arange(0.05, 0.951, 0.05), 10)
    eta = eta[np.abs(eta - 0.5) > 1e-9]
    return [
        _check("fisher", f"population minimizer q={q}", fisher_grid_check(q, eta), FISHER_ATOL)
        for q in Q_VALUES
    ]


def _linear_checks(seed: int, lipschitz_scale: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed + 1)
    config = SolverConfig(tol=VERIFY_TOL)
    results = []
    for q in Q_VALUES:
        data = random_instance(rng, 40, 3)
        lam = 0.05
        model, report = fit_linear(data, q, lam, config)
        reference = gd_solve_penalized(data, q, lam, mode="linear")
        results.append(
            _check(
                "linear",
                f"oracle objective q={q}",
                abs(objective(data, model) - reference.objective),
                OBJECTIVE_ATOL,
            )
        )
        results.append(
            _check(
                "linear",
                f"oracle decision values q={q}",
                np.max(np.abs(model.decision_values(data.X) - reference.decision_values(data.X))),
                DECISION_ATOL,
            )
        )
        results.append(
            _check(
                "linear",
                f"descent q={q}",
                max(np.max(np.diff(report.objective_trace)), 0.0),
                DESCENT_SLACK,
            )
        )
        system = build_system_inverse(data, q, lam)
        scale = LossSpec(q=q).lipschitz * np.max(np.sum(np.abs(system.matrix), axis=1)) / data.n
        results.append(
            _check(
                "linear",
                f"stationarity q={q}",
                report.kkt_residual,
                10.0 * VERIFY_TOL * scale,
            )
        )
    return results


def _kernel_checks(seed: int, lipschitz_scale: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed + 2)
    config = SolverConfig(tol=VERIFY_TOL)
    results = []
    for q in Q_VALUES:
        data = random_instance(rng, 30, 2)
        kernel = KernelSpec.gaussian(0.5)
        lam = 0.05
        model, report = fit_kernel(data, kernel, q, lam, config)
        reference = gd_solve_penalized(data, q, lam, mode="kernel", kernel=kernel)
        results.append(
            _check(
                "kernel",
                f"gaussian oracle objective q={q}",
                abs(kernel_objective(data, model) - reference.objective),
                OBJECTIVE_ATOL,
            )
        )
        results.append(
            _check(
                "kernel",
                f"descent q={q}",
                max(np.max(np.diff(report.objective_trace)), 0.0),
                DESCENT_SLACK,
            )
        )
        K = kernel_matrix(kernel, data.X)
        system = build_kernel_system(data, K, q, lam)
        scale = LossSpec(q=q).lipschitz * np.max(np.sum(np.abs(system.matrix), axis=1)) / data.n
        results.append(
            _check("kernel", f"stationarity q={q}", report.kkt_residual, 10.0 * VERIFY_TOL * scale)
        )

        data = random_instance(rng, 40, 3)
        linear_model, _ = fit_linear(data, q, lam, config)
        kernel_model, _ = fit_kernel(data, KernelSpec.linear(), q, lam, config)
        gap = np.max(
            np.abs(linear_model.decision_values(data.X) - kernel_model.decision_values(data.X))
        )
        results.append(_check("kernel", f"linear kernel equivalence q={q}", gap, DECISION_ATOL))
        mismatched = np.count_nonzero(
            predict(linear_model, data.X) != predict(kernel_model, data.X)
        )
        results.append(
            _check("kernel", f"linear kernel signs q={q}", mismatched, 0.0, "mismatched labels")
        )
    return results


def _constrained_checks(seed: int, lipschitz_scale: float) -> list[CheckResult]:
    rng = np.random.default_rng(seed + 3)
    config = SolverConfig(tol=VERIFY_TOL)
    results = []
    for q in Q_VALUES:
        data = random_instance(rng, 20, 2)
        model, _ = fit_linear(data, q, 0.05, config)
        solution = to_constrained(model)
        mapped = constrained_objective(data, q, solution.c, solution.omega0, solution.omega)
        _, _, best = constrained_solve_2d(data, q, solution.c)
        results.append(
            _check(
                "constrained",
                f"round trip objective q={q}",
                abs(mapped - best) / max(abs(best), 1e-12),
                CONSTRAINED_RTOL,
                f"c={solution.c:.6g}",
            )
        )
        flips = np.count_nonzero(
            np.sign(solution.decision_values(data.X)) != np.sign(model.decision_values(data.X))
        )
        results.append(_check("constrained", f"sign preservation q={q}", flips, 0.0))
    return results


def _bayes_checks(seed: int, lipschitz_scale: float) -> list[CheckResult]:
    _, oracle = gen_mixture(200, seed)
    first = bayes_error_mc(oracle, 20_000, seed=seed + 10)
    second = bayes_error_mc(oracle, 20_000, seed=seed + 11)
    inside = 0.0 if 0.0 < first.rate < 0.5 else 1.0
    combined = np.hypot(first.standard_error, second.standard_error)
    return [
        _check("bayes", "rate in (0, 0.5)", inside, 0.0, f"rate={first.rate:.4f}"),
        _check(
            "bayes",
            "two-seed agreement",
            abs(first.rate - second.rate),
            3.0 * combined,
            f"rates {first.rate:.4f} and {second.rate:.4f}",
        ),
    ]


_FAMILY_CHECKS: dict[str, Callable[[int, float], list[CheckResult]]] = {
    "loss": _loss_checks,
    "fisher": _fisher_checks,
    "linear": _linear_checks,
    "kernel": _kernel_checks,
    "constrained": _constrained_checks,
    "bayes": _bayes_checks,
}


def run_verification(
    families: Optional[Iterable[str]] = None, seed: int = 0, lipschitz_scale: float = 1.0
) -> list[CheckResult]:
    """Run the selected check families (all by default) and return their results in family order."""
    selected = list(FAMILIES if families is None else families)
    unknown = [f for f in selected if f not in _FAMILY_CHECKS]
    if unknown:
        raise ValueError(f"Unknown verification families {unknown}; choose from {list(FAMILIES)}.")
    if lipschitz_scale <= 0:
        raise ValueError(f"lipschitz_scale must be positive, got {lipschitz_scale}.")

    with ThreadPoolExecutor(max_workers=max(1, min(get_num_threads(), len(selected)))) as executor:
        futures = [executor.submit(_FAMILY_CHECKS[f], seed, lipschitz_scale) for f in selected]
        results = [check for future in futures for check in future.result()]

    failed = [r for r in results if not r.passed]
    if failed:
        logger.warning(f"{len(failed)} of {len(results)} verification checks failed.")
    else:
        logger.info("all %d verification checks passed", len(results))
    return results
