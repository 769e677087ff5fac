import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gendwd.dataset import FeatureScaling
from gendwd.exceptions import DegenerateModelError, ModelFileError, SchemaVersionError
from gendwd.kernel_dwd import KernelModel, fit_kernel
from gendwd.kernels import KernelSpec
from gendwd.linear import LinearModel, fit_linear
from gendwd.model import (
    SCHEMA_VERSION,
    ConstrainedSolution,
    ModelDocument,
    decision_function,
    from_constrained,
    load_model,
    predict,
    read_model_document,
    save_model,
    to_constrained,
)
from gendwd.verify import random_instance


@pytest.fixture
def linear_model():
    return LinearModel(beta0=-0.25, beta=np.array([0.1 + 0.2, -1.0 / 3.0, 2.5e-17]), q=1.0, lam=0.1)


@pytest.fixture
def kernel_model():
    data = random_instance(np.random.default_rng(2), 15, 2)
    model, _ = fit_kernel(data, KernelSpec.gaussian(0.7), 2.0, 0.05)
    return model


def test_predict_labels_ties_positive():
    model = LinearModel(beta0=0.0, beta=np.array([1.0]), q=1.0, lam=0.1)
    assert predict(model, np.array([[-2.0], [0.0], [3.0]])).tolist() == [-1, 1, 1]


def test_decision_function_dispatches(linear_model, kernel_model):
    X = np.ones((2, 3))
    np.testing.assert_array_equal(
        decision_function(linear_model, X), linear_model.decision_values(X)
    )
    X = np.zeros((2, 2))
    np.testing.assert_array_equal(
        decision_function(kernel_model, X), kernel_model.decision_values(X)
    )
    with pytest.raises(TypeError, match="Expected a LinearModel or KernelModel"):
        decision_function(object(), X)


def test_to_constrained_q1():
    model = LinearModel(beta0=1.0, beta=np.array([3.0, 4.0]), q=1.0, lam=0.1)
    solution = to_constrained(model)
    assert solution.omega.tolist() == pytest.approx([0.6, 0.8])
    assert solution.omega0 == pytest.approx(0.2)
    # (q+1)^(q+1) / q^q = 4 at q = 1
    assert solution.c == pytest.approx(4.0 * 25.0)


@pytest.mark.parametrize("q", [0.5, 1.0, 4.0, 8.0])
def test_constrained_round_trip(q):
    model = LinearModel(beta0=-0.3, beta=np.array([0.2, -1.1, 0.05]), q=q, lam=0.2)
    back = from_constrained(to_constrained(model), q, 0.2)
    np.testing.assert_allclose(back.beta, model.beta, rtol=1e-12)
    assert back.beta0 == pytest.approx(model.beta0, rel=1e-12)


def test_zero_coefficients_have_no_constrained_form():
    with pytest.raises(DegenerateModelError, match="smaller lambda"):
        to_constrained(LinearModel(beta0=1.0, beta=np.zeros(2), q=1.0, lam=10.0))


def test_from_constrained_rejects_nonpositive_budget():
    solution = ConstrainedSolution(omega0=0.0, omega=np.array([1.0]), c=0.0)
    with pytest.raises(ValueError, match="budget c must be positive"):
        from_constrained(solution, 1.0, 0.1)


@settings(max_examples=100, deadline=None)
@given(
    q=st.floats(min_value=0.2, max_value=10.0),
    beta0=st.floats(min_value=-5.0, max_value=5.0),
    scale=st.floats(min_value=1e-3, max_value=1e3),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_constrained_mapping_preserves_signs(q, beta0, scale, seed):
    rng = np.random.default_rng(seed)
    beta = scale * rng.standard_normal(3)
    model = LinearModel(beta0=beta0, beta=beta, q=q, lam=0.1)
    X = rng.standard_normal((50, 3))
    original = model.decision_values(X)
    mapped = to_constrained(model).decision_values(X)
    keep = np.abs(original) > 1e-9 * max(1.0, scale)
    np.testing.assert_array_equal(np.sign(mapped[keep]), np.sign(original[keep]))


def test_fitted_model_maps_to_constrained_form():
    data = random_instance(np.random.default_rng(4), 25, 2)
    model, _ = fit_linear(data, 1.0, 0.05)
    solution = to_constrained(model)
    assert np.linalg.norm(solution.omega) == pytest.approx(1.0)
    assert solution.c > 0


def test_linear_model_file_round_trip_is_exact(tmp_path, linear_model):
    path = tmp_path / "model.json"
    save_model(linear_model, path)
    loaded = load_model(path)
    assert isinstance(loaded, LinearModel)
    assert loaded.beta0 == linear_model.beta0
    assert loaded.beta.tolist() == linear_model.beta.tolist()
    assert loaded.q == linear_model.q
    assert loaded.lam == linear_model.lam


def test_kernel_model_file_round_trip_is_exact(tmp_path, kernel_model):
    path = tmp_path / "model.json"
    save_model(kernel_model, path)
    loaded = load_model(path)
    assert isinstance(loaded, KernelModel)
    assert loaded.kernel == kernel_model.kernel
    assert loaded.alpha.tolist() == kernel_model.alpha.tolist()
    assert loaded.train_inputs.tolist() == kernel_model.train_inputs.tolist()
    X = np.random.default_rng(0).standard_normal((10, 2))
    np.testing.assert_array_equal(loaded.decision_values(X), kernel_model.decision_values(X))


def test_model_file_keeps_ingestion_metadata(tmp_path, linear_model):
    path = tmp_path / "model.json"
    scaling = FeatureScaling(means=[0.0, 1.0, 2.0], scales=[1.0, 2.0, 3.0])
    save_model(
        linear_model,
        path,
        label_mapping={-1: "no", 1: "yes"},
        feature_scaling=scaling,
        feature_names=["a", "b", "c"],
    )
    raw = json.loads(path.read_text())
    assert raw["schema_version"] == SCHEMA_VERSION
    assert raw["lambda"] == 0.1
    assert raw["model_kind"] == "linear"
    document = read_model_document(path)
    assert document.label_mapping == {-1: "no", 1: "yes"}
    assert document.feature_scaling == scaling
    assert document.feature_names == ["a", "b", "c"]


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture
def valid_payload(linear_model):
    return json.loads(ModelDocument.from_model(linear_model).model_dump_json(by_alias=True))


def test_schema_version_mismatch(tmp_path, valid_payload):
    path = _write(tmp_path / "m.json", {**valid_payload, "schema_version": 2})
    with pytest.raises(SchemaVersionError, match="schema version 2"):
        load_model(path)


def test_missing_schema_version(tmp_path, valid_payload):
    valid_payload.pop("schema_version")
    with pytest.raises(ModelFileError, match="no schema_version"):
        load_model(_write(tmp_path / "m.json", valid_payload))


@pytest.mark.parametrize(
    "change,match",
    [
        ({"label_mapping": {"0": "a", "1": "b"}}, "malformed"),
        ({"coefficients": None}, "malformed"),
        ({"lambda": -1.0}, "malformed"),
        ({"model_kind": "kernel"}, "malformed"),
        ({"feature_names": ["only-one"]}, "malformed"),
    ],
)
def test_malformed_documents(tmp_path, valid_payload, change, match):
    with pytest.raises(ModelFileError, match=match):
        load_model(_write(tmp_path / "m.json", {**valid_payload, **change}))


def test_invalid_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ModelFileError, match="not valid JSON"):
        load_model(bad)
    with pytest.raises(ModelFileError, match="must contain a JSON object"):
        load_model(_write(tmp_path / "list.json", [1, 2]))
    with pytest.raises(ModelFileError, match="Cannot read"):
        load_model(tmp_path / "absent.json")


def test_schema_version_error_is_a_model_file_error():
    assert issubclass(SchemaVersionError, ModelFileError)
