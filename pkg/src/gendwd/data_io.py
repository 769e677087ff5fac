import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd
from sklearn.datasets import load_svmlight_file
from sklearn.model_selection import train_test_split as _sklearn_split

from gendwd.dataset import Dataset, FeatureScaling
from gendwd.exceptions import DatasetError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
DEFAULT_LABEL_COLUMN = -1


def _map_labels(raw: pd.Series) -> tuple[np.ndarray, Optional[dict[int, str]]]:
    labels = raw.astype(str).str.strip()
    # "+1", "1" and "1.0" are one label
    numeric = pd.to_numeric(labels, errors="coerce")
    if numeric.notna().all() and set(numeric.unique().tolist()) <= {-1.0, 1.0}:
        return numeric.to_numpy(dtype=float), None
    distinct = sorted(labels.unique().tolist())
    if len(distinct) > 2:
        raise DatasetError(
            f"Expected a binary label column, found {len(distinct)} labels: {distinct}."
        )
    if len(distinct) < 2:
        raise DatasetError(f"Expected two distinct labels, found only {distinct}.")
    negative, positive = distinct
    y = np.where(labels.to_numpy() == positive, 1.0, -1.0)
    logger.info("mapped label %r to -1 and %r to +1", negative, positive)
    return y, {-1: negative, 1: positive}


def _label_position(label_column: Union[int, str], columns: list) -> int:
    if isinstance(label_column, str):
        if label_column not in columns:
            raise DatasetError(f"Label column {label_column!r} not found; columns are {columns}.")
        return columns.index(label_column)
    position = label_column if label_column >= 0 else len(columns) + label_column
    if not 0 <= position < len(columns):
        raise DatasetError(
            f"Label column index {label_column} is out of range for {len(columns)} columns."
        )
    return position


def load_csv(
    path: PathLike,
    label_column: Union[int, str] = DEFAULT_LABEL_COLUMN,
    header: bool = True,
    standardize: bool = False,
) -> Dataset:
    """Read a comma-separated file with one observation per row.

    Lines starting with ``#`` are ignored. Labels may be any two distinct values: ``-1``/``+1`` are used as they
    are, otherwise the lexicographically smaller label becomes -1 and the mapping is kept on the dataset.

    Args:
        path: File to read.
        label_column: Position (negative counts from the end) or, with a header, the name of the label column.
        header: Whether the first non-comment line holds column names.
        standardize: Center and scale every non-constant feature column.

    Raises:
        DatasetError: On missing values, non-numeric features, or anything other than two labels.
    """
    try:
        frame = pd.read_csv(
            path, header=0 if header else None, comment="#", dtype=str, skipinitialspace=True
        )
    except OSError as e:
        raise DatasetError(f"Cannot read {path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"Cannot parse {path} as CSV: {e}") from e

    columns = list(frame.columns)
    position = _label_position(label_column, columns)
    if frame.shape[1] < 2:
        raise DatasetError(f"{path} needs at least one feature column and a label column.")
    if frame.isna().to_numpy().any():
        rows = sorted(set(np.nonzero(frame.isna().to_numpy())[0].tolist()))
        raise DatasetError(f"{path} has missing values in data rows {rows[:10]}.")

    features = frame.drop(columns=columns[position])
    try:
        X = features.astype(float).to_numpy()
    except ValueError as e:
        raise DatasetError(f"{path} has non-numeric feature values: {e}") from e
    y, mapping = _map_labels(frame.iloc[:, position])

    names = tuple(str(c) for c in features.columns) if header else None
    data = Dataset(X=X, y=y, feature_names=names, label_mapping=mapping)
    logger.info("loaded %d rows and %d features from %s", data.n, data.p, path)
    return standardize_dataset(data) if standardize else data


def load_libsvm(path: PathLike, n_features: Optional[int] = None) -> Dataset:
    """Read the sparse ``label idx:value ...`` format with 1-based indices into a dense dataset."""
    try:
        X_sparse, raw_labels = load_svmlight_file(
            str(path), n_features=n_features, zero_based=False
        )
    except OSError as e:
        raise DatasetError(f"Cannot read {path}: {e}") from e
    except ValueError as e:
        raise DatasetError(f"Cannot parse {path} as sparse label/feature data: {e}") from e
    labels = pd.Series(raw_labels).map(lambda v: f"{v:g}")
    y, mapping = _map_labels(labels)
    return Dataset(X=X_sparse.toarray(), y=y, label_mapping=mapping)


def standardize_dataset(data: Dataset) -> Dataset:
    """Copy of ``data`` with every non-constant column at mean 0 and variance 1."""
    scaling = FeatureScaling.fit(data.X)
    return data.with_features(scaling.apply(data.X), feature_scaling=scaling)


def save_csv(data: Dataset, path: PathLike, comments: Iterable[str] = ()) -> None:
    """Write ``data`` as CSV, features first and the label last.

    Labels are written in their original vocabulary when the dataset carries a mapping. Values use the shortest
    representation that reads back to the same float.
    """
    names = list(data.feature_names) if data.feature_names else [f"x{j + 1}" for j in range(data.p)]
    frame = pd.DataFrame(data.X, columns=names)
    labels = data.y.astype(int)
    if data.label_mapping:
        frame["label"] = [data.label_mapping[int(v)] for v in labels]
    else:
        frame["label"] = labels
    with open(path, "w", encoding="utf-8", newline="") as f:
        for comment in comments:
            f.write(f"# {comment}\n")
        frame.to_csv(f, index=False)
    logger.info("wrote %d rows to %s", data.n, path)


@dataclass
class FeatureTable:
    """Inputs read for prediction, with the raw label column when one was requested."""

    X: np.ndarray
    feature_names: Optional[list[str]] = None
    labels: Optional[list[str]] = None


def load_features(
    path: PathLike,
    header: bool = True,
    label_column: Optional[Union[int, str]] = None,
) -> FeatureTable:
    """Read a CSV for prediction.

    With ``label_column`` set, that column is split off and returned verbatim in ``labels`` so predictions can be
    scored in the original label vocabulary. An empty file (or one holding only a header) yields zero rows.
    """
    try:
        frame = pd.read_csv(
            path, header=0 if header else None, comment="#", dtype=str, skipinitialspace=True
        )
    except OSError as e:
        raise DatasetError(f"Cannot read {path}: {e}") from e
    except pd.errors.EmptyDataError:
        return FeatureTable(X=np.empty((0, 0)), labels=[] if label_column is not None else None)
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DatasetError(f"Cannot parse {path} as CSV: {e}") from e
    if frame.isna().to_numpy().any():
        raise DatasetError(f"{path} has missing values.")

    labels = None
    if label_column is not None:
        columns = list(frame.columns)
        position = _label_position(label_column, columns)
        labels = frame.iloc[:, position].astype(str).str.strip().tolist()
        frame = frame.drop(columns=columns[position])
    try:
        X = frame.astype(float).to_numpy()
    except ValueError as e:
        raise DatasetError(f"{path} has non-numeric feature values: {e}") from e
    names = [str(c) for c in frame.columns] if header else None
    return FeatureTable(X=X, feature_names=names, labels=labels)


def train_test_split(
    data: Dataset, ratio: float = 2.0 / 3.0, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Stratified split with ``round(ratio * n)`` training rows.

    Raises:
        ValueError: If ``ratio`` is not strictly between 0 and 1.
        DatasetError: If a class has fewer than two members.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"The training ratio must lie strictly between 0 and 1, got {ratio}.")
    counts = data.class_counts
    if min(counts.values()) < 2:
        raise DatasetError(f"Each class needs at least two members to split, got {counts}.")
    n_train = int(round(ratio * data.n))
    n_train = min(max(n_train, 2), data.n - 2)
    train_index, test_index = _sklearn_split(
        np.arange(data.n),
        train_size=n_train,
        random_state=seed,
        shuffle=True,
        stratify=data.y,
    )
    return data.subset(np.sort(train_index)), data.subset(np.sort(test_index))
