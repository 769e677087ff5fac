from unittest.mock import patch

import pytest

from gendwd.loss import loss_derivative
from gendwd.verify import FAMILIES, run_verification


def test_loss_and_fisher_families_pass():
    results = run_verification(["loss", "fisher"])
    assert results
    failed = [r.name for r in results if not r.passed]
    assert failed == []


def test_undersized_lipschitz_scale_is_caught():
    results = run_verification(["loss"], lipschitz_scale=0.5)
    majorization = [r for r in results if r.name.startswith("majorization")]
    assert majorization
    assert not any(r.passed for r in majorization)


def test_finite_difference_check_is_relative_away_from_the_threshold():
    results = run_verification(["loss"])
    relative = [r for r in results if r.name.startswith("finite-difference derivative q=")]
    near = [r for r in results if r.name.startswith("finite-difference derivative near")]
    assert len(relative) == len(near) == 4
    assert all(r.passed and r.tolerance == 1e-5 and r.detail == "relative" for r in relative)
    assert all(r.passed and r.tolerance == 1e-3 for r in near)


def test_finite_difference_check_catches_a_small_slope_error():
    # 1e-4 relative is below any flat absolute tolerance where the slope is tiny
    def skewed(spec, u):
        return loss_derivative(spec, u) * (1.0 + 1e-4)

    with patch("gendwd.verify.loss_derivative", side_effect=skewed):
        results = run_verification(["loss"])
    relative = [r for r in results if r.name.startswith("finite-difference derivative q=")]
    assert not any(r.passed for r in relative)


def test_results_follow_the_requested_family_order():
    results = run_verification(["fisher", "loss"])
    families = [r.family for r in results]
    assert families[0] == "fisher"
    assert families[-1] == "loss"
    assert families.index("loss") == families.count("fisher")


def test_check_result_to_dict():
    record = run_verification(["fisher"])[0].to_dict()
    assert set(record) == {"family", "name", "passed", "deviation", "tolerance", "detail"}


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"families": ["loss", "nope"]}, "Unknown verification families"),
        ({"lipschitz_scale": 0}, "positive"),
    ],
)
def test_run_verification_argument_checks(kwargs, match):
    with pytest.raises(ValueError, match=match):
        run_verification(**kwargs)


@pytest.mark.slow
def test_every_family_passes():
    results = run_verification()
    assert [r.family for r in results if r.family not in FAMILIES] == []
    assert {r.family for r in results} == set(FAMILIES)
    assert [r.name for r in results if not r.passed] == []
