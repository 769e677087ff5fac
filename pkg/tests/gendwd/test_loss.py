import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from gendwd.loss import (
    LossSpec,
    check_majorization,
    conditional_risk,
    hinge_loss,
    loss_curvature,
    loss_derivative,
    loss_value,
    population_minimizer,
)

exponents = st.floats(min_value=0.1, max_value=20.0, allow_nan=False, allow_infinity=False)
margins = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)


def test_loss_spec_constants():
    spec = LossSpec(q=1.0)
    assert spec.threshold == 0.5
    assert spec.lipschitz == 4.0
    assert LossSpec(q=4.0).lipschitz == pytest.approx(25.0 / 4.0)


@pytest.mark.parametrize("q", [0.0, -1.0, float("nan"), float("inf")])
def test_loss_spec_rejects_bad_exponents(q):
    with pytest.raises(ValidationError):
        LossSpec(q=q)


@pytest.mark.parametrize(
    "u,expected",
    [(-1.0, 2.0), (0.0, 1.0), (0.5, 0.5), (1.0, 0.25), (2.0, 0.125)],
)
def test_loss_value_q1(u, expected):
    assert loss_value(LossSpec(q=1.0), u) == pytest.approx(expected, rel=1e-14)


def test_loss_value_keeps_shape_and_scalar_type():
    spec = LossSpec(q=2.0)
    assert isinstance(loss_value(spec, 0.3), float)
    values = loss_value(spec, np.zeros((3, 4)))
    assert values.shape == (3, 4)


@pytest.mark.parametrize("q", [0.5, 1.0, 4.0, 8.0, 100.0])
def test_branches_meet_at_threshold(q):
    spec = LossSpec(q=q)
    t = spec.threshold
    eps = 1e-9
    assert loss_value(spec, t) == pytest.approx(1.0 / (q + 1.0), rel=1e-12)
    assert loss_value(spec, t + eps) == pytest.approx(loss_value(spec, t), abs=1e-8)
    assert loss_derivative(spec, t) == -1.0
    assert loss_derivative(spec, t + eps) == pytest.approx(-1.0, abs=1e-6)


def test_derivative_q1():
    spec = LossSpec(q=1.0)
    assert loss_derivative(spec, 1.0) == pytest.approx(-0.25)
    assert loss_derivative(spec, -3.0) == -1.0


@pytest.mark.parametrize("q", [0.5, 1.0, 4.0, 8.0])
def test_curvature_peaks_at_lipschitz_constant(q):
    spec = LossSpec(q=q)
    u = np.linspace(-3.0, 10.0, 5001)
    assert np.all(np.asarray(loss_curvature(spec, u)) <= spec.lipschitz * (1 + 1e-12))
    assert loss_curvature(spec, spec.threshold * (1 + 1e-12)) == pytest.approx(
        spec.lipschitz, rel=1e-9
    )
    assert loss_curvature(spec, 0.0) == 0.0


def test_large_exponent_does_not_overflow():
    spec = LossSpec(q=500.0)
    values = np.asarray(loss_value(spec, np.array([0.5, 1.0, 2.0, 50.0])))
    assert np.all(np.isfinite(values))
    assert np.all(values >= 0)


@settings(max_examples=200, deadline=None)
@given(q=exponents, a=margins, b=margins)
def test_convexity(q, a, b):
    spec = LossSpec(q=q)
    mid = loss_value(spec, 0.5 * (a + b))
    assert mid <= 0.5 * (loss_value(spec, a) + loss_value(spec, b)) + 1e-12


@settings(max_examples=200, deadline=None)
@given(q=exponents, a=margins, b=margins)
def test_derivative_is_lipschitz(q, a, b):
    spec = LossSpec(q=q)
    gap = abs(loss_derivative(spec, a) - loss_derivative(spec, b))
    assert gap <= spec.lipschitz * abs(a - b) + 1e-12


@settings(max_examples=300, deadline=None)
@given(q=exponents, t=margins, t_tilde=margins)
def test_quadratic_surrogate_majorizes(q, t, t_tilde):
    assert check_majorization(LossSpec(q=q), t, t_tilde)


@pytest.mark.parametrize("q", [0.5, 1.0, 4.0, 8.0])
def test_undersized_curvature_breaks_majorization(q):
    spec = LossSpec(q=q)
    t = spec.threshold + np.linspace(1e-4, 0.05, 50)
    ok = check_majorization(spec, t, spec.threshold, lipschitz=0.5 * spec.lipschitz)
    assert not np.all(ok)


def test_check_majorization_returns_bool_for_scalars():
    assert check_majorization(LossSpec(q=1.0), 0.0, 1.0) is True


@pytest.mark.parametrize("q", [10.0, 100.0, 1000.0])
def test_approaches_hinge_loss(q):
    u = np.linspace(-2.0, 3.0, 2001)
    gap = np.max(np.abs(np.asarray(loss_value(LossSpec(q=q), u)) - hinge_loss(u)))
    assert gap <= 1.0 / (q + 1.0) + 1e-12


def test_nonincreasing():
    spec = LossSpec(q=0.5)
    values = np.asarray(loss_value(spec, np.linspace(-4.0, 6.0, 1001)))
    assert np.all(np.diff(values) <= 1e-15)


@pytest.mark.parametrize("eta,expected", [(0.8, 1.0), (0.2, -1.0), (0.5, 0.0)])
def test_population_minimizer_q1(eta, expected):
    assert population_minimizer(LossSpec(q=1.0), eta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("q", [0.5, 1.0, 4.0, 8.0])
@pytest.mark.parametrize("eta", [0.1, 0.35, 0.65, 0.9])
def test_population_minimizer_minimizes_conditional_risk(q, eta):
    spec = LossSpec(q=q)
    f_star = population_minimizer(spec, eta)
    best = conditional_risk(spec, eta, f_star)
    for delta in (-1e-3, 1e-3, -0.1, 0.1):
        assert best <= conditional_risk(spec, eta, f_star + delta) + 1e-12


def test_population_minimizer_saturates_with_warning(caplog):
    spec = LossSpec(q=1.0)
    with caplog.at_level(logging.WARNING, logger="gendwd.loss"):
        values = population_minimizer(spec, np.array([0.0, 1.0]))
    assert values.tolist() == [-500.0, 500.0]
    assert "saturated" in caplog.text


def test_population_minimizer_rejects_probabilities_outside_unit_interval():
    with pytest.raises(ValueError, match="eta must lie"):
        population_minimizer(LossSpec(q=1.0), 1.5)
