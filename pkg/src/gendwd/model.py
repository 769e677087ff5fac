"""Prediction, the mapping to the constrained formulation, and model files.

Model files are a single JSON document::

    {
      "schema_version": 1,
      "model_kind": "linear" | "kernel",
      "q": 1.0,
      "lambda": 0.01,
      "kernel": {"kind": "gaussian", "offset": 1.0, "degree": 2, "sigma": 0.5} | null,
      "beta0": 0.12,
      "coefficients": [...],
      "train_inputs": [[...], ...] | null,
      "label_mapping": {"-1": "no", "1": "yes"} | null,
      "feature_scaling": {"means": [...], "scales": [...]} | null,
      "feature_names": [...] | null
    }

Floats are written in shortest round-trip form, so loading a saved model reproduces it bit for bit.
"""

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from gendwd.dataset import FeatureScaling
from gendwd.exceptions import DegenerateModelError, ModelFileError, SchemaVersionError
from gendwd.kernel_dwd import KernelModel
from gendwd.kernels import KernelSpec
from gendwd.linear import LinearModel

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

Model = Union[LinearModel, KernelModel]


def decision_function(model: Model, X_new: np.ndarray) -> np.ndarray:
    """Decision values of a linear or kernel model."""
    if isinstance(model, (LinearModel, KernelModel)):
        return model.decision_values(X_new)
    raise TypeError(f"Expected a LinearModel or KernelModel, got {type(model).__name__}.")


def predict(model: Model, X_new: np.ndarray) -> np.ndarray:
    """Labels in ``{-1, +1}``; a decision value of exactly zero is labelled +1."""
    values = decision_function(model, X_new)
    return np.where(values >= 0, 1, -1).astype(int)


@dataclass(frozen=True, eq=False)
class ConstrainedSolution:
    """Direction ``omega`` (unit norm), intercept ``omega0`` and budget ``c`` of the constrained problem."""

    omega0: float
    omega: np.ndarray
    c: float

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return self.omega0 + np.asarray(X, dtype=float) @ self.omega


def _log_budget_factor(q: float) -> float:
    # log((q+1)^(q+1) / q^q)
    return (q + 1.0) * math.log1p(q) - q * math.log(q)


def to_constrained(model: LinearModel) -> ConstrainedSolution:
    """Map a penalized fit to the equivalent constrained solution.

    ``omega = beta / ||beta||``, ``omega0 = beta0 / ||beta||`` and ``c = ((q+1)^(q+1) / q^q) ||beta||^(q+1)``.
    Dividing by a positive norm keeps the sign of every decision value.

    Raises:
        DegenerateModelError: If ``beta`` is identically zero.
    """
    norm = float(np.linalg.norm(model.beta))
    if norm == 0.0:
        raise DegenerateModelError(
            "The fitted coefficient vector is zero, so it defines no direction. "
            "Use a smaller lambda."
        )
    c = math.exp(_log_budget_factor(model.q) + (model.q + 1.0) * math.log(norm))
    return ConstrainedSolution(omega0=model.beta0 / norm, omega=model.beta / norm, c=c)


def from_constrained(solution: ConstrainedSolution, q: float, lam: float) -> LinearModel:
    """Inverse of :func:`to_constrained`: rescale ``(omega0, omega)`` by the norm implied by ``c``."""
    if solution.c <= 0:
        raise ValueError(f"The budget c must be positive, got {solution.c}.")
    norm = math.exp((math.log(solution.c) - _log_budget_factor(q)) / (q + 1.0))
    return LinearModel(beta0=solution.omega0 * norm, beta=solution.omega * norm, q=q, lam=lam)


class ModelKind(str, Enum):
    LINEAR = "linear"
    KERNEL = "kernel"


class ModelDocument(BaseModel):
    """On-disk representation of a fitted model."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    schema_version: int = Field(SCHEMA_VERSION, description="Format version of the document.")
    model_kind: ModelKind = Field(..., description="Whether the model is linear or kernel.")
    q: float = Field(..., gt=0, allow_inf_nan=False, description="Loss exponent.")
    lam: float = Field(..., alias="lambda", gt=0, allow_inf_nan=False, description="Penalty.")
    kernel: Optional[KernelSpec] = Field(None, description="Kernel of a kernel model.")
    beta0: float = Field(..., allow_inf_nan=False, description="Intercept.")
    coefficients: list[float] = Field(
        ..., description="Primal coefficients (linear) or dual coefficients (kernel)."
    )
    train_inputs: Optional[list[list[float]]] = Field(
        None, description="Training inputs retained by a kernel model."
    )
    label_mapping: Optional[dict[int, str]] = Field(
        None, description="Original label for -1 and +1."
    )
    feature_scaling: Optional[FeatureScaling] = Field(
        None, description="Standardization applied to the inputs before fitting."
    )
    feature_names: Optional[list[str]] = Field(None, description="Input column names.")

    @field_validator("coefficients")
    @classmethod
    def validate_coefficients(cls, coefficients: list[float]) -> list[float]:
        if not all(math.isfinite(c) for c in coefficients):
            raise ValueError("coefficients must be finite")
        return coefficients

    @field_validator("label_mapping")
    @classmethod
    def validate_label_mapping(cls, mapping: Optional[dict[int, str]]) -> Optional[dict[int, str]]:
        if mapping is not None and set(mapping) != {-1, 1}:
            raise ValueError("label_mapping must have exactly the keys -1 and 1")
        return mapping

    @model_validator(mode="after")
    def validate_shape(self):
        if self.model_kind == ModelKind.KERNEL:
            if self.kernel is None or self.train_inputs is None:
                raise ValueError("kernel models need both 'kernel' and 'train_inputs'")
            if len(self.train_inputs) != len(self.coefficients):
                raise ValueError(
                    f"{len(self.coefficients)} dual coefficients for "
                    f"{len(self.train_inputs)} training inputs"
                )
            widths = {len(row) for row in self.train_inputs}
            if len(widths) > 1:
                raise ValueError("train_inputs rows differ in length")
        p = self.input_dimension
        if self.feature_scaling is not None and len(self.feature_scaling.means) != p:
            raise ValueError("feature_scaling does not match the input dimension")
        if self.feature_names is not None and len(self.feature_names) != p:
            raise ValueError("feature_names does not match the input dimension")
        return self

    @property
    def input_dimension(self) -> int:
        if self.model_kind == ModelKind.LINEAR:
            return len(self.coefficients)
        return len(self.train_inputs[0]) if self.train_inputs else 0

    @classmethod
    def from_model(
        cls,
        model: Model,
        label_mapping: Optional[dict[int, str]] = None,
        feature_scaling: Optional[FeatureScaling] = None,
        feature_names: Optional[list[str]] = None,
    ) -> "ModelDocument":
        common = dict(
            q=model.q,
            lam=model.lam,
            beta0=model.beta0,
            label_mapping=(
                {int(k): str(v) for k, v in label_mapping.items()} if label_mapping else None
            ),
            feature_scaling=feature_scaling,
            feature_names=list(feature_names) if feature_names is not None else None,
        )
        if isinstance(model, LinearModel):
            return cls(model_kind=ModelKind.LINEAR, coefficients=model.beta.tolist(), **common)
        return cls(
            model_kind=ModelKind.KERNEL,
            kernel=model.kernel,
            coefficients=model.alpha.tolist(),
            train_inputs=model.train_inputs.tolist(),
            **common,
        )

    def to_model(self) -> Model:
        if self.model_kind == ModelKind.LINEAR:
            return LinearModel(
                beta0=self.beta0, beta=np.asarray(self.coefficients), q=self.q, lam=self.lam
            )
        return KernelModel(
            beta0=self.beta0,
            alpha=np.asarray(self.coefficients),
            kernel=self.kernel,
            q=self.q,
            lam=self.lam,
            train_inputs=np.asarray(self.train_inputs, dtype=float),
        )


def save_model(
    model: Model,
    path: Union[str, Path],
    *,
    label_mapping: Optional[dict[int, str]] = None,
    feature_scaling: Optional[FeatureScaling] = None,
    feature_names: Optional[list[str]] = None,
) -> None:
    """Write ``model`` (and optional ingestion metadata) as a JSON model file."""
    document = ModelDocument.from_model(model, label_mapping, feature_scaling, feature_names)
    Path(path).write_text(document.model_dump_json(by_alias=True, indent=2), encoding="utf-8")
    logger.info("saved %s model to %s", document.model_kind.value, path)


def read_model_document(path: Union[str, Path]) -> ModelDocument:
    """Parse and validate a model file.

    Raises:
        SchemaVersionError: If the file was written with another schema version.
        ModelFileError: If the file is unreadable, not JSON, or misses required fields.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ModelFileError(f"Cannot read model file {path}: {e}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"Model file {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ModelFileError(f"Model file {path} must contain a JSON object.")
    if "schema_version" not in raw:
        raise ModelFileError(f"Model file {path} has no schema_version field.")
    version = raw["schema_version"]
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"Model file {path} has schema version {version}, but this version of gendwd reads "
            f"only version {SCHEMA_VERSION}. Refit and save the model again."
        )
    try:
        return ModelDocument.model_validate(raw)
    except ValidationError as e:
        raise ModelFileError(f"Model file {path} is malformed: {e}") from e


def load_model(path: Union[str, Path]) -> Model:
    """Load the model stored at ``path``; see :func:`read_model_document` for errors."""
    return read_model_document(path).to_model()
