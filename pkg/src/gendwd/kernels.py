import logging
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.distance import pdist
from sklearn.metrics.pairwise import pairwise_kernels

from gendwd.config import get_num_threads
from gendwd.exceptions import DatasetError

logger = logging.getLogger(__name__)

# Kernel matrices with at least this many entries are assembled with row-block parallelism.
PARALLEL_MIN_ENTRIES = 1_000_000
DEFAULT_MEDIAN_PAIRS = 10_000


class KernelKind(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    GAUSSIAN = "gaussian"


class KernelSpec(BaseModel):
    """A reproducing kernel.

    ``linear`` is ``<x, x'>``, ``polynomial`` is ``(offset + <x, x'>)^degree`` and ``gaussian`` is
    ``exp(-sigma ||x - x'||^2)``.
    """

    model_config = ConfigDict(frozen=True)

    kind: KernelKind = Field(..., description="Kernel family.")
    offset: float = Field(
        1.0, allow_inf_nan=False, description="Additive constant ``a`` of the polynomial kernel."
    )
    degree: int = Field(2, ge=1, description="Degree ``d`` of the polynomial kernel.")
    sigma: Optional[float] = Field(
        None, gt=0, allow_inf_nan=False, description="Bandwidth of the gaussian kernel."
    )

    @model_validator(mode="after")
    def validate_sigma(self):
        if self.kind == KernelKind.GAUSSIAN and self.sigma is None:
            raise ValueError("A gaussian kernel requires a positive sigma.")
        return self

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(kind=KernelKind.LINEAR)

    @classmethod
    def polynomial(cls, offset: float = 1.0, degree: int = 2) -> "KernelSpec":
        return cls(kind=KernelKind.POLYNOMIAL, offset=offset, degree=degree)

    @classmethod
    def gaussian(cls, sigma: float) -> "KernelSpec":
        return cls(kind=KernelKind.GAUSSIAN, sigma=sigma)

    def describe(self) -> str:
        if self.kind == KernelKind.GAUSSIAN:
            return f"gaussian(sigma={self.sigma:g})"
        if self.kind == KernelKind.POLYNOMIAL:
            return f"polynomial(offset={self.offset:g}, degree={self.degree})"
        return "linear"


def kernel_value(spec: KernelSpec, x: np.ndarray, x_prime: np.ndarray) -> float:
    """Evaluate the kernel at a single pair of points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    x_prime = np.asarray(x_prime, dtype=float).reshape(-1)
    if x.shape != x_prime.shape:
        raise DatasetError(
            f"Kernel arguments differ in dimension: {x.shape[0]} vs {x_prime.shape[0]}."
        )
    if spec.kind == KernelKind.LINEAR:
        return float(np.dot(x, x_prime))
    if spec.kind == KernelKind.POLYNOMIAL:
        return float((spec.offset + np.dot(x, x_prime)) ** spec.degree)
    diff = x - x_prime
    return float(np.exp(-spec.sigma * np.dot(diff, diff)))


def _pairwise(spec: KernelSpec, A: np.ndarray, B: Optional[np.ndarray]) -> np.ndarray:
    rows = A.shape[0] * (A.shape[0] if B is None else B.shape[0])
    n_jobs = get_num_threads() if rows >= PARALLEL_MIN_ENTRIES else 1
    if spec.kind == KernelKind.LINEAR:
        return pairwise_kernels(A, B, metric="linear", n_jobs=n_jobs)
    if spec.kind == KernelKind.POLYNOMIAL:
        return pairwise_kernels(
            A,
            B,
            metric="polynomial",
            gamma=1.0,
            coef0=spec.offset,
            degree=spec.degree,
            n_jobs=n_jobs,
        )
    return pairwise_kernels(A, B, metric="rbf", gamma=spec.sigma, n_jobs=n_jobs)


def _as_inputs(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DatasetError(f"Expected a 2-d input matrix, got {X.ndim} dimensions.")
    return X


def kernel_matrix(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Dense ``n x n`` kernel matrix ``K_ij = K(x_i, x_j)``, exactly symmetric."""
    X = _as_inputs(X)
    K = _pairwise(spec, X, None)
    K = 0.5 * (K + K.T)
    if spec.kind == KernelKind.GAUSSIAN:
        np.fill_diagonal(K, 1.0)
    return K


def cross_kernel(spec: KernelSpec, X_new: np.ndarray, X_train: np.ndarray) -> np.ndarray:
    """``m x n`` matrix of kernel values between new points and training points."""
    X_new = _as_inputs(X_new)
    X_train = _as_inputs(X_train)
    if X_new.shape[1] != X_train.shape[1]:
        raise DatasetError(
            f"Model was trained on {X_train.shape[1]} features, got {X_new.shape[1]}."
        )
    if X_new.shape[0] == 0:
        return np.empty((0, X_train.shape[0]))
    return _pairwise(spec, X_new, X_train)


def median_heuristic_sigma(
    X: np.ndarray, max_pairs: int = DEFAULT_MEDIAN_PAIRS, seed: int = 0
) -> float:
    """Gaussian bandwidth ``1 / median ||x_i - x_j||^2``.

    Pairs of coincident points are left out, so duplicating every row does not move the result. When there are
    more than ``max_pairs`` distinct pairs, ``max_pairs`` of them are drawn with a seeded generator.

    Raises:
        DatasetError: With fewer than two rows, or when every point is identical.
    """
    X = _as_inputs(X)
    n = X.shape[0]
    if n < 2:
        raise DatasetError("The median heuristic needs at least two points.")
    if n * (n - 1) // 2 <= max_pairs:
        distances = pdist(X, metric="sqeuclidean")
    else:
        rng = np.random.default_rng(seed)
        first = rng.integers(0, n, size=max_pairs)
        second = rng.integers(0, n - 1, size=max_pairs)
        second = second + (second >= first)
        distances = np.sum((X[first] - X[second]) ** 2, axis=1)
    distances = distances[distances > 0]
    if distances.size == 0:
        raise DatasetError("All points are identical; the median heuristic is undefined.")
    sigma = 1.0 / float(np.median(distances))
    logger.debug("median heuristic sigma=%.6g from %d pairs", sigma, distances.size)
    return sigma
