from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from gendwd.config import DEFAULT_MAX_ITER, DEFAULT_TOL, SolverConfig
from gendwd.dataset import Dataset
from gendwd.kernel_dwd import fit_kernel
from gendwd.kernels import KernelSpec, median_heuristic_sigma
from gendwd.linear import fit_linear
from gendwd.model import decision_function

KERNEL_CHOICES = ("linear", "poly", "gauss")


class DWDClassifier(ClassifierMixin, BaseEstimator):
    """scikit-learn estimator for generalized DWD.

    Args:
        q: Loss exponent.
        lam: Penalty.
        kernel: ``"linear"`` fits the primal problem; ``"poly"`` and ``"gauss"`` fit kernel DWD.
        sigma: Gaussian bandwidth; the median heuristic is used when ``None``.
        degree: Polynomial degree.
        offset: Polynomial offset.
        class_weight: Optional weight per original class label.
        tol: Stopping tolerance on the coefficient change.
        max_iter: Iteration cap.

    Example:
        .. code-block:: python

            from gendwd import DWDClassifier

            clf = DWDClassifier(q=1.0, lam=0.01).fit(X, y)
            clf.predict(X_new)
    """

    def __init__(
        self,
        q: float = 1.0,
        lam: float = 1.0,
        kernel: str = "linear",
        sigma: Optional[float] = None,
        degree: int = 2,
        offset: float = 1.0,
        class_weight: Optional[dict] = None,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ):
        self.q = q
        self.lam = lam
        self.kernel = kernel
        self.sigma = sigma
        self.degree = degree
        self.offset = offset
        self.class_weight = class_weight
        self.tol = tol
        self.max_iter = max_iter

    def _kernel_spec(self, X: np.ndarray) -> Optional[KernelSpec]:
        if self.kernel == "linear":
            return None
        if self.kernel == "poly":
            return KernelSpec.polynomial(offset=self.offset, degree=self.degree)
        if self.kernel == "gauss":
            sigma = self.sigma if self.sigma is not None else median_heuristic_sigma(X)
            return KernelSpec.gaussian(sigma)
        raise ValueError(f"kernel must be one of {KERNEL_CHOICES}, got {self.kernel!r}.")

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] != 2:
            raise ValueError(
                f"DWDClassifier is a binary classifier, got {self.classes_.shape[0]} classes."
            )
        labels = np.where(y == self.classes_[1], 1.0, -1.0)
        data = Dataset(X=X, y=labels)
        if self.class_weight is not None:
            data = data.with_class_weights(
                positive=self.class_weight.get(self.classes_[1], 1.0),
                negative=self.class_weight.get(self.classes_[0], 1.0),
            )
        config = SolverConfig(tol=self.tol, max_iter=self.max_iter)
        spec = self._kernel_spec(X)
        if spec is None:
            self.model_, self.report_ = fit_linear(data, self.q, self.lam, config)
        else:
            self.model_, self.report_ = fit_kernel(data, spec, self.q, self.lam, config)
        self.kernel_spec_ = spec
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X)
        return decision_function(self.model_, X)

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.where(scores >= 0, 1, 0)]
