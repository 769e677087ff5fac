"""The generalized DWD loss family ``V_q`` and the quantities derived from it.

For an exponent ``q > 0`` the loss is linear, ``1 - u``, up to the transition point ``q / (q + 1)`` and decays
like ``u^-q`` beyond it. The loss is convex, differentiable and has a gradient that is Lipschitz with constant
``M = (q + 1)^2 / q``, which is what makes the quadratic majorization used by the solvers valid.

All functions accept a float or a NumPy array and return the same shape. The power branch is evaluated in log
space so that large exponents do not overflow; ``q`` above 100 is accepted but numerically delicate.
"""

import logging
import math
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# |f| cap for the population minimizer at eta in {0, 1}, in units of the transition point
SATURATION_FACTOR = 1e3


class LossSpec(BaseModel):
    """Exponent of the generalized DWD loss and its derived constants."""

    model_config = ConfigDict(frozen=True)

    q: float = Field(..., gt=0, allow_inf_nan=False, description="Exponent of the inverse margin.")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def threshold(self) -> float:
        """Transition point ``q / (q + 1)`` between the linear and the power branch."""
        return self.q / (self.q + 1.0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def lipschitz(self) -> float:
        """Lipschitz constant ``M = (q + 1)^2 / q`` of the loss derivative."""
        return (self.q + 1.0) ** 2 / self.q

    @property
    def log_power_scale(self) -> float:
        """``log(q^q / (q + 1)^(q + 1))``, the constant in front of ``u^-q``."""
        return self.q * math.log(self.q) - (self.q + 1.0) * math.log1p(self.q)

    @property
    def log_threshold(self) -> float:
        return math.log(self.q) - math.log1p(self.q)


def _prepare(u: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(u, dtype=float)
    return arr, arr.ndim == 0


def _finish(out: np.ndarray, scalar: bool) -> ArrayLike:
    return float(out) if scalar else out


def loss_value(spec: LossSpec, u: ArrayLike) -> ArrayLike:
    """Evaluate ``V_q(u)``.

    At ``u == q / (q + 1)`` both branches agree and the linear one is used.
    """
    arr, scalar = _prepare(u)
    safe = np.maximum(arr, spec.threshold)
    power = np.exp(spec.log_power_scale - spec.q * np.log(safe))
    out = np.where(arr <= spec.threshold, 1.0 - arr, power)
    return _finish(out, scalar)


def loss_derivative(spec: LossSpec, u: ArrayLike) -> ArrayLike:
    """Evaluate ``V_q'(u)``, which lies in ``[-1, 0)``."""
    arr, scalar = _prepare(u)
    safe = np.maximum(arr, spec.threshold)
    power = -np.exp((spec.q + 1.0) * (spec.log_threshold - np.log(safe)))
    out = np.where(arr <= spec.threshold, -1.0, power)
    return _finish(out, scalar)


def loss_curvature(spec: LossSpec, u: ArrayLike) -> ArrayLike:
    """Second derivative of ``V_q``: zero on the linear branch, bounded by ``M`` everywhere."""
    arr, scalar = _prepare(u)
    safe = np.maximum(arr, spec.threshold)
    log_coef = (spec.q + 1.0) * math.log(spec.q) - spec.q * math.log1p(spec.q)
    power = np.exp(log_coef - (spec.q + 2.0) * np.log(safe))
    out = np.where(arr <= spec.threshold, 0.0, power)
    return _finish(out, scalar)


def hinge_loss(u: ArrayLike) -> ArrayLike:
    """SVM hinge loss ``max(1 - u, 0)``, the ``q -> inf`` limit of ``V_q``."""
    arr, scalar = _prepare(u)
    return _finish(np.maximum(1.0 - arr, 0.0), scalar)


def check_majorization(
    spec: LossSpec,
    t: ArrayLike,
    t_tilde: ArrayLike,
    *,
    lipschitz: float | None = None,
    atol: float = 1e-12,
) -> Union[bool, np.ndarray]:
    """Whether the quadratic surrogate expanded at ``t_tilde`` lies above ``V_q`` at ``t``.

    Args:
        spec: Loss exponent.
        t: Evaluation point(s).
        t_tilde: Expansion point(s).
        lipschitz: Curvature of the surrogate; defaults to ``spec.lipschitz``. Smaller values are only useful as
            a negative control.
        atol: Absolute rounding slack granted to the right-hand side.

    Returns:
        A bool for scalar inputs, otherwise a boolean array.
    """
    m = spec.lipschitz if lipschitz is None else lipschitz
    t_arr, scalar_t = _prepare(t)
    tt_arr, scalar_tt = _prepare(t_tilde)
    delta = t_arr - tt_arr
    lhs = np.asarray(loss_value(spec, t_arr))
    rhs = (
        np.asarray(loss_value(spec, tt_arr))
        + np.asarray(loss_derivative(spec, tt_arr)) * delta
        + 0.5 * m * delta**2
    )
    ok = lhs <= rhs + atol
    if scalar_t and scalar_tt:
        return bool(ok)
    return ok


def conditional_risk(spec: LossSpec, eta: ArrayLike, f: ArrayLike) -> ArrayLike:
    """Expected loss ``eta * V_q(f) + (1 - eta) * V_q(-f)`` at a point with ``P(Y=1|x) = eta``."""
    eta_arr, scalar_eta = _prepare(eta)
    f_arr, scalar_f = _prepare(f)
    out = eta_arr * np.asarray(loss_value(spec, f_arr)) + (1.0 - eta_arr) * np.asarray(
        loss_value(spec, -f_arr)
    )
    return _finish(out, scalar_eta and scalar_f)


def population_minimizer(spec: LossSpec, eta: ArrayLike) -> ArrayLike:
    """Minimizer over ``f`` of :func:`conditional_risk`.

    Equals ``q/(q+1) * (eta/(1-eta))^(1/(q+1))`` above one half, the negated mirror below it and zero at one
    half. The closed form diverges at ``eta in {0, 1}``; there, and wherever the magnitude would exceed
    ``1e3 * q/(q+1)``, the value is clamped to that saturation level and a warning is logged.
    """
    arr, scalar = _prepare(eta)
    if np.any((arr < 0) | (arr > 1)) or not np.all(np.isfinite(arr)):
        raise ValueError("eta must lie in [0, 1].")

    with np.errstate(divide="ignore"):
        log_odds = np.log(arr) - np.log1p(-arr)
    magnitude = spec.threshold * np.exp(np.abs(log_odds) / (spec.q + 1.0))
    saturation = SATURATION_FACTOR * spec.threshold
    saturated = magnitude > saturation
    if np.any(saturated):
        logger.warning(
            "population minimizer saturated at +/-%s for %d value(s) of eta near 0 or 1",
            saturation,
            int(np.count_nonzero(saturated)),
        )
    out = np.sign(log_odds) * np.minimum(magnitude, saturation)
    return _finish(out, scalar)
