import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from gendwd.config import SolverConfig, get_num_threads
from gendwd.dataset import Dataset
from gendwd.exceptions import DatasetError, DegenerateFoldsError
from gendwd.kernel_dwd import KernelModel, fit_kernel, fit_kernel_path
from gendwd.kernels import KernelKind, KernelSpec, median_heuristic_sigma
from gendwd.linear import FitReport, LinearModel, fit_linear, fit_linear_path
from gendwd.model import predict

logger = logging.getLogger(__name__)

DEFAULT_FOLDS = 5
DEFAULT_LAMBDA_GRID_SIZE = 50
DEFAULT_SIGMA_MULTIPLIERS = tuple(2.0**k for k in range(-3, 4))
MAX_FOLD_REDRAWS = 100
TIE_TOLERANCE = 1e-12


def default_lambda_grid() -> list[float]:
    return np.logspace(-4, 2, DEFAULT_LAMBDA_GRID_SIZE).tolist()


class CvPlan(BaseModel):
    """Grid and fold settings of a cross-validation run."""

    model_config = ConfigDict(frozen=True)

    folds: int = Field(DEFAULT_FOLDS, ge=2, description="Number of folds.")
    lambda_grid: list[float] = Field(
        default_factory=default_lambda_grid, description="Penalty values to evaluate."
    )
    sigma_grid: Optional[list[float]] = Field(
        None,
        description="Gaussian bandwidths to evaluate. Defaults to the median heuristic times 2^-3..2^3.",
    )
    seed: int = Field(0, description="Seed of the fold assignment.")
    stratified: bool = Field(True, description="Balance each class across folds.")

    @field_validator("lambda_grid", "sigma_grid")
    @classmethod
    def validate_grid(cls, grid: Optional[list[float]]) -> Optional[list[float]]:
        if grid is None:
            return grid
        if not grid:
            raise ValueError("grids must not be empty")
        if not all(np.isfinite(v) and v > 0 for v in grid):
            raise ValueError("grid values must be positive and finite")
        return grid


def kfold_split(
    n: int, folds: int, seed: int = 0, labels: Optional[np.ndarray] = None
) -> np.ndarray:
    """Assign each of ``n`` indices to one of ``folds`` folds.

    The indices are shuffled (within each class when ``labels`` is given, classes laid end to end) and dealt out
    round-robin, so fold sizes differ by at most one.
    """
    if not 2 <= folds <= n:
        raise ValueError(f"The number of folds must lie in [2, {n}], got {folds}.")
    rng = np.random.default_rng(seed)
    if labels is None:
        order = rng.permutation(n)
    else:
        labels = np.asarray(labels)
        if labels.shape[0] != n:
            raise ValueError(f"Expected {n} labels, got {labels.shape[0]}.")
        order = np.concatenate(
            [rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)]
        )
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.arange(n) % folds
    return assignment


def _valid_assignment(assignment: np.ndarray, y: np.ndarray, folds: int) -> bool:
    for k in range(folds):
        train = y[assignment != k]
        if not (np.any(train > 0) and np.any(train < 0)):
            return False
    return True


def _draw_folds(data: Dataset, plan: CvPlan) -> tuple[np.ndarray, int]:
    labels = data.y if plan.stratified else None
    for attempt in range(MAX_FOLD_REDRAWS):
        seed = plan.seed + attempt
        assignment = kfold_split(data.n, plan.folds, seed, labels)
        if _valid_assignment(assignment, data.y, plan.folds):
            if attempt:
                logger.info("fold assignment redrawn %d time(s); using seed %d", attempt, seed)
            return assignment, seed
    raise DegenerateFoldsError(
        f"No fold assignment among {MAX_FOLD_REDRAWS} seeds leaves both classes in every training "
        f"fold (class counts {data.class_counts}, {plan.folds} folds). Use fewer folds."
    )


@dataclass
class CvResult:
    """Outcome of :func:`cross_validate`.

    ``fold_errors`` has shape ``(n_sigma, n_lambda, folds)``; without a gaussian kernel ``n_sigma`` is 1 and
    ``sigma_grid`` is ``None``.
    """

    q: float
    kernel: Optional[KernelSpec]
    lambda_grid: np.ndarray
    sigma_grid: Optional[np.ndarray]
    fold_errors: np.ndarray = field(repr=False)
    mean_error: np.ndarray = field(repr=False)
    standard_error: np.ndarray = field(repr=False)
    best_lambda: float
    best_sigma: Optional[float]
    model: Union[LinearModel, KernelModel] = field(repr=False)
    report: FitReport = field(repr=False)
    nonconverged: int = 0
    fold_seed: int = 0

    @property
    def best_error(self) -> float:
        return float(self.mean_error.min())

    def to_frame(self) -> pd.DataFrame:
        """One row per grid point with the mean, its standard error and every fold's error."""
        rows = []
        n_sigma, n_lambda, folds = self.fold_errors.shape
        for s in range(n_sigma):
            for j in range(n_lambda):
                row = {}
                if self.sigma_grid is not None:
                    row["sigma"] = float(self.sigma_grid[s])
                row["lambda"] = float(self.lambda_grid[j])
                row["mean_error"] = float(self.mean_error[s, j])
                row["se"] = float(self.standard_error[s, j])
                for k in range(folds):
                    row[f"fold_{k + 1}"] = float(self.fold_errors[s, j, k])
                rows.append(row)
        return pd.DataFrame(rows)


def _select(mean_error: np.ndarray, lambdas: np.ndarray, sigmas: np.ndarray) -> tuple[int, int]:
    best = mean_error.min()
    candidates = np.argwhere(mean_error <= best + TIE_TOLERANCE)
    # larger lambda first, then larger sigma
    s, j = max(candidates.tolist(), key=lambda sj: (lambdas[sj[1]], sigmas[sj[0]]))
    return int(s), int(j)


def _fold_task(
    data: Dataset,
    train_mask: np.ndarray,
    q: float,
    kernel: Optional[KernelSpec],
    lambdas: list[float],
    config: SolverConfig,
) -> tuple[np.ndarray, int]:
    train = data.subset(train_mask)
    test = data.subset(~train_mask)
    if kernel is None:
        path = fit_linear_path(train, q, lambdas, config)
    else:
        path = fit_kernel_path(train, kernel, q, lambdas, config)
    errors = np.array([np.mean(predict(model, test.X) != test.y) for model, _ in path])
    nonconverged = sum(1 for _, report in path if not report.converged)
    return errors, nonconverged


def _sigma_grid(data: Dataset, plan: CvPlan) -> list[float]:
    if plan.sigma_grid is not None:
        return list(plan.sigma_grid)
    center = median_heuristic_sigma(data.X)
    return [center * m for m in DEFAULT_SIGMA_MULTIPLIERS]


def cross_validate(
    data: Dataset,
    q: float,
    kernel: Optional[KernelSpec] = None,
    plan: Optional[CvPlan] = None,
    config: Optional[SolverConfig] = None,
) -> CvResult:
    """Choose ``lambda`` (and the gaussian ``sigma``) by k-fold misclassification rate, then refit.

    Each (sigma, fold) pair fits a warm-started path over the whole lambda grid; these tasks run on a thread pool
    sized by ``GENDWD_NUM_THREADS``. With a gaussian kernel the kernel's own ``sigma`` is replaced by every value of
    the sigma grid. The chosen pair has the smallest mean error, ties going to the larger lambda and then the
    larger sigma.

    Args:
        data: Full training sample.
        q: Loss exponent.
        kernel: ``None`` for primal linear DWD, otherwise the kernel to use.
        plan: Grids, folds and seed.
        config: Stopping rule shared by every fit.

    Raises:
        DatasetError: If there are more folds than observations.
        DegenerateFoldsError: If no assignment leaves both classes in every training fold.
    """
    data.require_fittable()
    plan = plan or CvPlan()
    config = config or SolverConfig()
    if plan.folds > data.n:
        raise DatasetError(f"Cannot split {data.n} observations into {plan.folds} folds.")

    assignment, fold_seed = _draw_folds(data, plan)
    lambdas = list(plan.lambda_grid)
    gaussian = kernel is not None and kernel.kind == KernelKind.GAUSSIAN
    sigmas = _sigma_grid(data, plan) if gaussian else [None]
    specs = [kernel.model_copy(update={"sigma": s}) if gaussian else kernel for s in sigmas]

    tasks = [(s, k) for s in range(len(sigmas)) for k in range(plan.folds)]
    with ThreadPoolExecutor(max_workers=min(get_num_threads(), len(tasks))) as executor:
        futures = [
            executor.submit(_fold_task, data, assignment != k, q, specs[s], lambdas, config)
            for s, k in tasks
        ]
        outcomes = [f.result() for f in futures]

    fold_errors = np.empty((len(sigmas), len(lambdas), plan.folds))
    nonconverged = 0
    for (s, k), (errors, missed) in zip(tasks, outcomes, strict=True):
        fold_errors[s, :, k] = errors
        nonconverged += missed
    mean_error = fold_errors.mean(axis=2)
    standard_error = fold_errors.std(axis=2, ddof=1) / np.sqrt(plan.folds)

    sigma_values = np.array([s if s is not None else 0.0 for s in sigmas])
    s_best, j_best = _select(mean_error, np.asarray(lambdas), sigma_values)
    best_lambda = lambdas[j_best]
    best_spec = specs[s_best]
    if best_spec is None:
        model, report = fit_linear(data, q, best_lambda, config)
    else:
        model, report = fit_kernel(data, best_spec, q, best_lambda, config)
    if nonconverged:
        logger.warning(
            f"{nonconverged} cross-validation fit(s) hit max_iter={config.max_iter}; "
            "their last iterates were scored."
        )
    logger.info(
        "cross-validation chose lambda=%g%s with mean error %.4f",
        best_lambda,
        f" sigma={sigmas[s_best]:g}" if gaussian else "",
        mean_error[s_best, j_best],
    )
    return CvResult(
        q=q,
        kernel=best_spec,
        lambda_grid=np.asarray(lambdas),
        sigma_grid=np.asarray(sigmas, dtype=float) if gaussian else None,
        fold_errors=fold_errors,
        mean_error=mean_error,
        standard_error=standard_error,
        best_lambda=best_lambda,
        best_sigma=sigmas[s_best],
        model=model,
        report=report,
        nonconverged=nonconverged,
        fold_seed=fold_seed,
    )
