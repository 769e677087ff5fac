from dataclasses import dataclass, replace
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from gendwd.exceptions import DatasetError


class FeatureScaling(BaseModel):
    """Per-column centering and scaling, ``(x - mean) / scale``.

    Constant columns get ``mean = 0`` and ``scale = 1`` so they pass through untouched.
    """

    model_config = ConfigDict(frozen=True)

    means: list[float] = Field(..., description="Column means subtracted before scaling.")
    scales: list[float] = Field(..., description="Positive column scales.")

    @model_validator(mode="after")
    def validate_lengths(self):
        if len(self.means) != len(self.scales):
            raise ValueError("means and scales must have the same length")
        if any(s <= 0 for s in self.scales):
            raise ValueError("scales must be positive")
        return self

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaling":
        X = np.asarray(X, dtype=float)
        means = X.mean(axis=0)
        scales = X.std(axis=0)
        constant = ~(scales > 0)
        means[constant] = 0.0
        scales[constant] = 1.0
        return cls(means=means.tolist(), scales=scales.tolist())

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.means):
            raise DatasetError(
                f"Scaling was fitted on {len(self.means)} features, got input of shape {X.shape}."
            )
        return (X - np.asarray(self.means)) / np.asarray(self.scales)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """A binary classification sample.

    Attributes:
        X: ``n x p`` design matrix, one observation per row.
        y: Labels in ``{-1, +1}``.
        weights: Optional positive per-observation weights ``w(y_i)``; ``None`` means all ones.
        feature_names: Optional column names, carried through ingestion and emitted files.
        label_mapping: Original label for ``-1`` and ``+1`` when the data came from a file.
        feature_scaling: Standardization already applied to ``X``, if any.
    """

    X: np.ndarray
    y: np.ndarray
    weights: Optional[np.ndarray] = None
    feature_names: Optional[tuple[str, ...]] = None
    label_mapping: Optional[dict[int, Any]] = None
    feature_scaling: Optional[FeatureScaling] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DatasetError(f"X must be a 2-d matrix, got an array with {X.ndim} dimensions.")
        n, p = X.shape
        if n < 1 or p < 1:
            raise DatasetError(f"X must have at least one row and one column, got shape {X.shape}.")
        if not np.all(np.isfinite(X)):
            raise DatasetError("X contains non-finite entries (NaN or infinity).")

        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if y.shape[0] != n:
            raise DatasetError(f"X has {n} rows but y has {y.shape[0]} labels.")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            bad = sorted(set(np.unique(y[~np.isin(y, (-1.0, 1.0))]).tolist()))
            raise DatasetError(f"Labels must be -1 or +1, found {bad}.")

        weights = None
        if self.weights is not None:
            weights = np.array(self.weights, dtype=float, copy=True).reshape(-1)
            if weights.shape[0] != n:
                raise DatasetError(f"Expected {n} weights, got {weights.shape[0]}.")
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                raise DatasetError("Observation weights must be finite and strictly positive.")
            weights = _frozen(weights)

        if self.feature_names is not None and len(self.feature_names) != p:
            raise DatasetError(
                f"Got {len(self.feature_names)} feature names for {p} feature columns."
            )
        if self.feature_scaling is not None and len(self.feature_scaling.means) != p:
            raise DatasetError("feature_scaling does not match the number of feature columns.")

        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "weights", weights)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def w(self) -> np.ndarray:
        """Observation weights, all ones when none were given."""
        if self.weights is None:
            return np.ones(self.n)
        return self.weights

    @property
    def class_counts(self) -> dict[int, int]:
        return {-1: int(np.sum(self.y < 0)), 1: int(np.sum(self.y > 0))}

    def has_both_classes(self) -> bool:
        counts = self.class_counts
        return counts[-1] > 0 and counts[1] > 0

    def require_fittable(self) -> None:
        """Raise unless the sample can be used to fit a classifier."""
        if self.n < 2:
            raise DatasetError(f"Fitting needs at least 2 observations, got {self.n}.")
        if not self.has_both_classes():
            raise DatasetError(
                f"Fitting needs both classes present, got counts {self.class_counts}."
            )

    def subset(self, index: np.ndarray) -> "Dataset":
        """Rows selected by an integer or boolean index, keeping weights and metadata."""
        return replace(
            self,
            X=self.X[index],
            y=self.y[index],
            weights=None if self.weights is None else self.weights[index],
        )

    def with_class_weights(self, positive: float, negative: float) -> "Dataset":
        """Copy whose weights depend on the label only: ``positive`` for +1, ``negative`` for -1."""
        if not (positive > 0 and negative > 0):
            raise DatasetError("Class weights must be strictly positive.")
        return replace(self, weights=np.where(self.y > 0, float(positive), float(negative)))

    def with_features(
        self, X: np.ndarray, feature_scaling: Optional[FeatureScaling] = None
    ) -> "Dataset":
        return replace(self, X=X, feature_scaling=feature_scaling)
