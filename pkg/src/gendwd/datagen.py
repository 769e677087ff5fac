"""Synthetic data for the simulation designs: the two-dimensional Gaussian mixture, the high-dimensional
data-piling design and the four examples with outliers and heteroscedastic classes.

Every generator is a pure function of its arguments. Randomness comes from ``numpy.random.Generator`` on the
``PCG64`` bit generator seeded explicitly, so a scenario and a seed always reproduce the same data. Positive points
come first in every generated sample.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import logsumexp

from gendwd.dataset import Dataset

logger = logging.getLogger(__name__)

GENERATOR_NAME = "numpy.PCG64"
GENERATOR_VERSION = 1

MIXTURE_CENTERS_PER_CLASS = 10
MIXTURE_PRECISION = 5.0
DATAPILING_PER_CLASS = 50
DATAPILING_DIMENSION = 200
DATAPILING_SHIFT = 3.0
EXAMPLE_SHIFT = 2.2
EXAMPLE_OUTLIER_FRACTION = 0.2
EXAMPLE4_SCALE = 11.09
EXAMPLE4_DIMENSION = 50
DEFAULT_EXAMPLE_N = 500
DEFAULT_EXAMPLE_P = 50


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class BayesOracle:
    """The Bayes classifier of the two-class Gaussian mixture, for one realization of the centers.

    Each class density is an equal-weight mixture of ``N(mu_k, I / 5)`` over its ten centers.
    """

    positive_centers: np.ndarray
    negative_centers: np.ndarray

    @staticmethod
    def _log_density(Z: np.ndarray, centers: np.ndarray) -> np.ndarray:
        sq = np.sum((Z[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        return logsumexp(-0.5 * MIXTURE_PRECISION * sq, axis=1)

    def score(self, Z: np.ndarray) -> np.ndarray:
        """Log ratio of the positive to the negative mixture density (shared constants cancel)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return self._log_density(Z, self.positive_centers) - self._log_density(
            Z, self.negative_centers
        )

    def classify(self, Z: np.ndarray) -> np.ndarray:
        """Bayes labels; points where both densities agree go to +1."""
        return np.where(self.score(Z) >= 0, 1, -1).astype(int)

    def sample(self, n: int, rng: Union[int, np.random.Generator]) -> Dataset:
        """Draw ``n / 2`` fresh points per class, positives first."""
        if n < 2 or n % 2:
            raise ValueError(f"The mixture sample size must be even and at least 2, got {n}.")
        rng = make_rng(rng) if isinstance(rng, (int, np.integer)) else rng
        half = n // 2
        parts = []
        for centers in (self.positive_centers, self.negative_centers):
            picks = rng.integers(0, centers.shape[0], size=half)
            noise = rng.standard_normal((half, 2)) / np.sqrt(MIXTURE_PRECISION)
            parts.append(centers[picks] + noise)
        y = np.concatenate([np.ones(half), -np.ones(half)])
        return Dataset(X=np.vstack(parts), y=y, feature_names=("x1", "x2"))


def gen_mixture(n: int = 200, seed: int = 0) -> tuple[Dataset, BayesOracle]:
    """Two-dimensional mixture sample and its Bayes oracle.

    Ten centers per class are drawn from ``N((1, 0), I)`` for +1 and ``N((0, 1), I)`` for -1; each point picks one
    of its class's centers uniformly and adds ``N(0, I / 5)`` noise.
    """
    rng = make_rng(seed)
    positive = rng.standard_normal((MIXTURE_CENTERS_PER_CLASS, 2)) + np.array([1.0, 0.0])
    negative = rng.standard_normal((MIXTURE_CENTERS_PER_CLASS, 2)) + np.array([0.0, 1.0])
    oracle = BayesOracle(positive_centers=positive, negative_centers=negative)
    return oracle.sample(n, rng), oracle


def gen_datapiling(seed: int = 0) -> Dataset:
    """100 points in 200 dimensions, 50 per class, from ``N(+-mu, I)`` with ``mu = (3, 0, ..., 0)``."""
    rng = make_rng(seed)
    mu = np.zeros(DATAPILING_DIMENSION)
    mu[0] = DATAPILING_SHIFT
    positive = rng.standard_normal((DATAPILING_PER_CLASS, DATAPILING_DIMENSION)) + mu
    negative = rng.standard_normal((DATAPILING_PER_CLASS, DATAPILING_DIMENSION)) - mu
    y = np.concatenate([np.ones(DATAPILING_PER_CLASS), -np.ones(DATAPILING_PER_CLASS)])
    return Dataset(X=np.vstack([positive, negative]), y=y)


def _example_class(
    k: int,
    sign: float,
    size: int,
    p: int,
    rng: np.random.Generator,
    shared_outlier_coordinate: Optional[int],
) -> np.ndarray:
    X = rng.standard_normal((size, p))
    if k == 4:
        half = p // 2
        if sign > 0:
            X[:, :half] *= EXAMPLE4_SCALE
        X[:, half:] = X[:, :half] ** 2
        return X

    means = np.zeros((size, p))
    means[:, 0] = sign * EXAMPLE_SHIFT
    n_outliers = int(round(EXAMPLE_OUTLIER_FRACTION * size)) if k in (2, 3) else 0
    outliers = np.zeros(size, dtype=bool)
    if n_outliers:
        outliers[rng.choice(size, size=n_outliers, replace=False)] = True
    if k == 2:
        means[outliers, 0] = sign * 100.0
        means[outliers, 1] = sign * 500.0
    elif k == 3:
        means[outliers, 0] = sign * 0.1
        if shared_outlier_coordinate is None:
            coords = rng.integers(1, p, size=n_outliers)
        else:
            coords = np.full(n_outliers, shared_outlier_coordinate)
        means[np.nonzero(outliers)[0], coords] = sign * 100.0
    return X + means


def gen_example(
    k: int,
    n: int = DEFAULT_EXAMPLE_N,
    p: int = DEFAULT_EXAMPLE_P,
    seed: int = 0,
    shared_outlier_coordinate: bool = False,
) -> Dataset:
    """One of the four balanced linear-DWD simulation designs.

    1. ``N((+-2.2, 0, ..., 0), I)``.
    2. As 1 for 80% of each class; the other 20% are centred at ``(+-100, +-500, 0, ..., 0)``.
    3. As 1 for 80% of each class; the other 20% have first mean coordinate ``+-0.1`` and one randomly chosen
       other coordinate at ``+-100``. The coordinate is re-drawn for every point unless
       ``shared_outlier_coordinate`` is set, in which case one coordinate per class is drawn.
    4. ``p = 50``: the first 25 coordinates are standard normal for -1 and ``11.09`` times standard normal for
       +1; the last 25 are the squares of the first 25.

    Raises:
        ValueError: For ``k`` outside 1..4, odd ``n``, or a dimension the design cannot use.
    """
    if k not in (1, 2, 3, 4):
        raise ValueError(f"Example number must be 1, 2, 3 or 4, got {k}.")
    if n < 2 or n % 2:
        raise ValueError(f"Examples are balanced, so n must be even and at least 2, got {n}.")
    if k == 4 and p != EXAMPLE4_DIMENSION:
        raise ValueError(f"Example 4 is defined for p={EXAMPLE4_DIMENSION} only, got p={p}.")
    if p < (2 if k in (2, 3) else 1):
        raise ValueError(f"Example {k} cannot be generated with p={p}.")

    rng = make_rng(seed)
    half = n // 2
    parts = []
    for sign in (1.0, -1.0):
        shared = int(rng.integers(1, p)) if (k == 3 and shared_outlier_coordinate) else None
        parts.append(_example_class(k, sign, half, p, rng, shared))
    y = np.concatenate([np.ones(half), -np.ones(half)])
    return Dataset(X=np.vstack(parts), y=y)


class Scenario(str, Enum):
    MIXTURE = "mixture"
    DATAPILING = "datapiling"
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    EXAMPLE3 = "example3"
    EXAMPLE4 = "example4"


SCENARIO_ALIASES = {
    "fig1": Scenario.MIXTURE,
    "fig2": Scenario.DATAPILING,
    "ex1": Scenario.EXAMPLE1,
    "ex2": Scenario.EXAMPLE2,
    "ex3": Scenario.EXAMPLE3,
    "ex4": Scenario.EXAMPLE4,
}


class ScenarioSpec(BaseModel):
    """A reproducible synthetic design: scenario, size and seed."""

    model_config = ConfigDict(frozen=True)

    kind: Scenario = Field(..., description="Which design to generate.")
    n: Optional[int] = Field(None, ge=2, description="Sample size; scenario default when omitted.")
    p: Optional[int] = Field(None, ge=1, description="Dimension; scenario default when omitted.")
    seed: int = Field(0, description="Seed of the PCG64 generator.")
    shared_outlier_coordinate: bool = Field(
        False, description="Example 3 only: one outlier coordinate per class instead of per point."
    )

    @field_validator("kind", mode="before")
    @classmethod
    def resolve_alias(cls, value):
        if isinstance(value, str) and value in SCENARIO_ALIASES:
            return SCENARIO_ALIASES[value]
        return value

    @model_validator(mode="after")
    def validate_dimensions(self):
        if self.n is not None and self.n % 2:
            raise ValueError(f"{self.kind.value} is balanced, so n must be even, got {self.n}.")
        if self.kind == Scenario.MIXTURE and self.p not in (None, 2):
            raise ValueError("The mixture scenario is two-dimensional.")
        if self.kind == Scenario.DATAPILING:
            if self.p not in (None, DATAPILING_DIMENSION):
                raise ValueError(f"The data-piling scenario has p={DATAPILING_DIMENSION}.")
            if self.n not in (None, 2 * DATAPILING_PER_CLASS):
                raise ValueError(f"The data-piling scenario has n={2 * DATAPILING_PER_CLASS}.")
        if self.kind == Scenario.EXAMPLE4 and self.p not in (None, EXAMPLE4_DIMENSION):
            raise ValueError(f"Example 4 is defined for p={EXAMPLE4_DIMENSION} only.")
        return self

    def generate(self) -> tuple[Dataset, Optional[BayesOracle]]:
        """The dataset, plus the Bayes oracle for the mixture scenario."""
        if self.kind == Scenario.MIXTURE:
            data, oracle = gen_mixture(self.n or 200, self.seed)
            return data, oracle
        if self.kind == Scenario.DATAPILING:
            return gen_datapiling(self.seed), None
        k = int(self.kind.value[-1])
        data = gen_example(
            k,
            n=self.n or DEFAULT_EXAMPLE_N,
            p=self.p or DEFAULT_EXAMPLE_P,
            seed=self.seed,
            shared_outlier_coordinate=self.shared_outlier_coordinate,
        )
        logger.info(
            "generated %s with n=%d p=%d seed=%d", self.kind.value, data.n, data.p, self.seed
        )
        return data, None

    def header_comments(self) -> list[str]:
        """Provenance lines written at the top of emitted dataset files."""
        return [
            f"scenario={self.kind.value}",
            f"seed={self.seed}",
            f"generator={GENERATOR_NAME}",
            f"generator_version={GENERATOR_VERSION}",
        ]
