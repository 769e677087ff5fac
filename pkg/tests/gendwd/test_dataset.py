import numpy as np
import pytest
from pydantic import ValidationError

from gendwd.dataset import Dataset, FeatureScaling
from gendwd.exceptions import DatasetError


@pytest.fixture
def data():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0]])
    y = np.array([1, -1, 1, -1])
    return Dataset(X=X, y=y, feature_names=("a", "b"))


def test_dataset_basics(data):
    assert data.n == 4
    assert data.p == 2
    assert data.class_counts == {-1: 2, 1: 2}
    assert data.w.tolist() == [1.0, 1.0, 1.0, 1.0]
    assert data.has_both_classes()


def test_dataset_copies_and_freezes_inputs():
    X = np.zeros((2, 1))
    data = Dataset(X=X, y=[1, -1])
    X[0, 0] = 5.0
    assert data.X[0, 0] == 0.0
    assert not data.X.flags.writeable
    assert not data.y.flags.writeable


def test_one_dimensional_inputs_become_a_column():
    data = Dataset(X=[1.0, 2.0, 3.0], y=[1, -1, 1])
    assert data.X.shape == (3, 1)


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"X": np.zeros((3, 2)), "y": [1, -1]}, "3 rows but y has 2"),
        ({"X": np.zeros((2, 2)), "y": [1, 0]}, "Labels must be -1 or \\+1"),
        ({"X": [[np.nan, 1.0], [0.0, 1.0]], "y": [1, -1]}, "non-finite"),
        ({"X": np.zeros((2, 2)), "y": [1, -1], "weights": [1.0, 0.0]}, "strictly positive"),
        ({"X": np.zeros((2, 2)), "y": [1, -1], "weights": [1.0]}, "Expected 2 weights"),
        ({"X": np.zeros((2, 2)), "y": [1, -1], "feature_names": ("a",)}, "1 feature names"),
        ({"X": np.zeros((0, 2)), "y": []}, "at least one row"),
    ],
)
def test_dataset_validation(kwargs, match):
    with pytest.raises(DatasetError, match=match):
        Dataset(**kwargs)


def test_require_fittable_needs_both_classes():
    data = Dataset(X=np.zeros((3, 1)), y=[1, 1, 1])
    with pytest.raises(DatasetError, match="both classes"):
        data.require_fittable()
    with pytest.raises(DatasetError, match="at least 2 observations"):
        Dataset(X=np.zeros((1, 1)), y=[1]).require_fittable()


def test_subset_keeps_weights_and_metadata(data):
    weighted = data.with_class_weights(positive=2.0, negative=0.5)
    part = weighted.subset(np.array([0, 1]))
    assert part.n == 2
    assert part.w.tolist() == [2.0, 0.5]
    assert part.feature_names == ("a", "b")


def test_with_class_weights_depends_on_label_only(data):
    weighted = data.with_class_weights(positive=3.0, negative=1.5)
    assert weighted.w.tolist() == [3.0, 1.5, 3.0, 1.5]
    with pytest.raises(DatasetError, match="strictly positive"):
        data.with_class_weights(positive=0.0, negative=1.0)


def test_feature_scaling_leaves_constant_columns_alone():
    X = np.array([[1.0, 7.0], [3.0, 7.0], [5.0, 7.0]])
    scaling = FeatureScaling.fit(X)
    assert scaling.means == [3.0, 0.0]
    assert scaling.scales[1] == 1.0
    scaled = scaling.apply(X)
    assert scaled[:, 0].mean() == pytest.approx(0.0)
    assert scaled[:, 0].std() == pytest.approx(1.0)
    assert scaled[:, 1].tolist() == [7.0, 7.0, 7.0]


def test_feature_scaling_rejects_wrong_width():
    scaling = FeatureScaling(means=[0.0, 0.0], scales=[1.0, 1.0])
    with pytest.raises(DatasetError, match="fitted on 2 features"):
        scaling.apply(np.zeros((3, 3)))


def test_feature_scaling_validation():
    with pytest.raises(ValidationError, match="same length"):
        FeatureScaling(means=[0.0], scales=[1.0, 1.0])
    with pytest.raises(ValidationError, match="positive"):
        FeatureScaling(means=[0.0], scales=[0.0])
