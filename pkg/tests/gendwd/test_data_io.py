import numpy as np
import pytest

from gendwd.data_io import (
    load_csv,
    load_features,
    load_libsvm,
    save_csv,
    standardize_dataset,
    train_test_split,
)
from gendwd.dataset import Dataset
from gendwd.exceptions import DatasetError


@pytest.fixture
def write(tmp_path):
    def _write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


def test_string_labels_are_mapped_lexicographically(write):
    data = load_csv(write("a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n"))
    assert data.y.tolist() == [1.0, -1.0, 1.0]
    assert data.label_mapping == {-1: "no", 1: "yes"}
    assert data.feature_names == ("a", "b")
    assert data.X.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]


def test_signed_labels_are_used_as_is(write):
    data = load_csv(write("x,label\n1,+1\n2,-1\n3,1\n"))
    assert data.y.tolist() == [1.0, -1.0, 1.0]
    assert data.label_mapping is None


def test_zero_one_labels_get_a_mapping(write):
    data = load_csv(write("x,label\n1,1\n2,0\n"))
    assert data.y.tolist() == [1.0, -1.0]
    assert data.label_mapping == {-1: "0", 1: "1"}


@pytest.mark.parametrize(
    "text,match",
    [
        ("a,label\n1,x\n2,y\n3,z\n", "binary label column"),
        ("a,label\n1,x\n2,x\n", "two distinct labels"),
        ("a,label\n1,x\n,y\n", r"missing values in data rows \[1\]"),
        ("a,label\nfoo,x\n2,y\n", "non-numeric"),
        ("label\nx\ny\n", "at least one feature column"),
    ],
)
def test_malformed_csv(write, text, match):
    with pytest.raises(DatasetError, match=match):
        load_csv(write(text))


@pytest.mark.parametrize("label_column", ["label", 0, -3])
def test_label_column_by_name_or_position(write, label_column):
    data = load_csv(write("label,a,b\nyes,1,2\nno,3,4\n"), label_column=label_column)
    assert data.X.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert data.feature_names == ("a", "b")


@pytest.mark.parametrize("label_column,match", [("target", "not found"), (5, "out of range")])
def test_unknown_label_column(write, label_column, match):
    with pytest.raises(DatasetError, match=match):
        load_csv(write("a,label\n1,x\n2,y\n"), label_column=label_column)


def test_comments_and_headerless_files(write):
    data = load_csv(write("# scenario=example1\n1,2,1\n3,4,-1\n"), header=False)
    assert data.n == 2
    assert data.feature_names is None
    assert data.X.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="Cannot read"):
        load_csv(tmp_path / "absent.csv")
    with pytest.raises(DatasetError, match="Cannot read"):
        load_libsvm(tmp_path / "absent.svm")


def test_standardize_on_load(write):
    data = load_csv(write("a,b,label\n1,5,x\n2,5,y\n3,5,x\n4,5,y\n"), standardize=True)
    assert data.X[:, 0].mean() == pytest.approx(0.0)
    assert data.X[:, 0].std() == pytest.approx(1.0)
    assert data.X[:, 1].tolist() == [5.0] * 4
    assert data.feature_scaling is not None
    assert data.feature_scaling.means[0] == pytest.approx(2.5)


def test_standardize_dataset_keeps_labels():
    data = Dataset(X=[[1.0], [3.0]], y=[1, -1], label_mapping={-1: "a", 1: "b"})
    scaled = standardize_dataset(data)
    assert scaled.X[:, 0].tolist() == [-1.0, 1.0]
    assert scaled.label_mapping == {-1: "a", 1: "b"}


def test_save_and_reload_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = Dataset(
        X=rng.standard_normal((6, 3)) / 3.0,
        y=[1, -1, 1, -1, 1, -1],
        feature_names=("u", "v", "w"),
        label_mapping={-1: "cat", 1: "dog"},
    )
    path = tmp_path / "out.csv"
    save_csv(data, path, comments=["scenario=example1", "seed=0"])
    assert path.read_text().startswith("# scenario=example1\n# seed=0\nu,v,w,label\n")
    back = load_csv(path)
    np.testing.assert_array_equal(back.X, data.X)
    assert back.y.tolist() == data.y.tolist()
    assert back.label_mapping == data.label_mapping
    assert back.feature_names == data.feature_names


def test_save_csv_names_unnamed_columns(tmp_path):
    path = tmp_path / "out.csv"
    save_csv(Dataset(X=[[1.0, 2.0], [3.0, 4.0]], y=[1, -1]), path)
    assert path.read_text().splitlines() == ["x1,x2,label", "1.0,2.0,1", "3.0,4.0,-1"]


def test_libsvm(write):
    data = load_libsvm(write("1 1:0.5 3:2\n-1 2:1.5\n", "data.svm"))
    assert data.X.tolist() == [[0.5, 0.0, 2.0], [0.0, 1.5, 0.0]]
    assert data.y.tolist() == [1.0, -1.0]
    assert data.label_mapping is None


def test_libsvm_parse_errors(write):
    with pytest.raises(DatasetError, match="Cannot parse"):
        load_libsvm(write("this is not sparse data\n", "bad.svm"))


def test_load_features_with_labels(write):
    table = load_features(write("a,b,label\n1,2,yes\n3,4,no\n"), label_column="label")
    assert table.X.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert table.labels == ["yes", "no"]
    assert table.feature_names == ["a", "b"]


def test_load_features_empty_inputs(write):
    header_only = load_features(write("a,b\n"))
    assert header_only.X.shape == (0, 2)
    empty = load_features(write("", "empty.csv"), label_column=-1)
    assert empty.X.shape[0] == 0
    assert empty.labels == []


def test_load_features_rejects_bad_values(write):
    with pytest.raises(DatasetError, match="non-numeric"):
        load_features(write("a\nfoo\n"))
    with pytest.raises(DatasetError, match="missing values"):
        load_features(write("a,b\n1,\n"))


@pytest.fixture
def balanced():
    rng = np.random.default_rng(1)
    return Dataset(X=rng.standard_normal((30, 2)), y=[1] * 15 + [-1] * 15)


def test_train_test_split_sizes_and_strata(balanced):
    train, test = train_test_split(balanced, 2.0 / 3.0, seed=4)
    assert train.n == 20
    assert test.n == 10
    assert train.class_counts == {-1: 10, 1: 10}
    rows = {tuple(r) for r in train.X} | {tuple(r) for r in test.X}
    assert len(rows) == 30


def test_train_test_split_is_seeded(balanced):
    first, _ = train_test_split(balanced, 0.5, seed=3)
    again, _ = train_test_split(balanced, 0.5, seed=3)
    np.testing.assert_array_equal(first.X, again.X)


def test_train_test_split_errors(balanced):
    with pytest.raises(ValueError, match="strictly between 0 and 1"):
        train_test_split(balanced, 1.0)
    lonely = Dataset(X=np.zeros((4, 1)), y=[1, -1, -1, -1])
    with pytest.raises(DatasetError, match="at least two members"):
        train_test_split(lonely)
