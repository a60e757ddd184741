"""
Observation data bound to graph nodes.

Contains:
- Dataset: d x k matrix with one named column per observed node
- load_dataset / write_frame: delimiter-separated files via pandas
- train_test_split / kfold_splits: seeded row partitions
- prepare_training: centring with the offset kept for test data
"""

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from admg.graph import Admg
from core.constants import FLOAT_FORMAT
from core.errors import ValidationError


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Observations, one row each.

    Attributes:
        values: d x k array of finite reals
        columns: Node name bound to each column
    """

    values: np.ndarray
    columns: Tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1 and len(self.columns) == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValidationError(f"data must be a matrix, got {values.ndim} dimensions")
        if values.shape[1] != len(self.columns):
            raise ValidationError(
                f"{values.shape[1]} data columns but {len(self.columns)} column names"
            )
        if len(set(self.columns)) != len(self.columns):
            raise ValidationError("duplicate column names")
        if not np.all(np.isfinite(values)):
            raise ValidationError("data contains missing or non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @classmethod
    def empty(cls, columns: Sequence[str]) -> "Dataset":
        return cls(np.zeros((0, len(columns))), tuple(columns))

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Dataset":
        try:
            values = frame.to_numpy(dtype=float)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"data has non-numeric entries: {e}") from None
        return cls(values, tuple(str(c).strip() for c in frame.columns))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=list(self.columns))

    def bind(self, graph: Admg) -> "Dataset":
        """Reorder columns to the graph's observed nodes; they must match exactly."""
        missing = [n for n in graph.observed if n not in self.columns]
        extra = [c for c in self.columns if c not in graph.observed]
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing columns for observed nodes {missing}")
            if extra:
                parts.append(f"columns {extra} match no observed node")
            raise ValidationError("; ".join(parts))
        idx = [self.columns.index(n) for n in graph.observed]
        return Dataset(self.values[:, idx], graph.observed)

    def column_means(self) -> np.ndarray:
        if self.d == 0:
            return np.zeros(len(self.columns))
        return self.values.mean(axis=0)

    def centered(self, means: Optional[np.ndarray] = None) -> "Dataset":
        """Subtract ``means`` (the column means if not given)."""
        means = self.column_means() if means is None else np.asarray(means, dtype=float)
        return Dataset(self.values - means, self.columns)

    def rows(self, index: np.ndarray) -> "Dataset":
        return Dataset(self.values[np.asarray(index, dtype=int)], self.columns)

    def scatter(self) -> np.ndarray:
        """Sum of outer products sum_t y_t y_t^T."""
        return self.values.T @ self.values


def load_dataset(path: str) -> Dataset:
    """Read a headered delimiter-separated file (delimiter sniffed)."""
    try:
        frame = pd.read_csv(path, sep=None, engine="python")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, csv.Error, ValueError) as e:
        raise ValidationError(f"cannot read data file '{path}': {e}") from None
    return Dataset.from_frame(frame)


def write_frame(frame: pd.DataFrame, path: str) -> None:
    """CSV with 17 significant digits so a replay reads back the same floats."""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def train_test_split(
    dataset: Dataset, test_fraction: float, rng: np.random.Generator
) -> Tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test fraction must lie in (0, 1), got {test_fraction}")
    perm = rng.permutation(dataset.d)
    n_test = max(1, int(round(test_fraction * dataset.d)))
    return dataset.rows(np.sort(perm[n_test:])), dataset.rows(np.sort(perm[:n_test]))


def kfold_splits(dataset: Dataset, k: int, rng: np.random.Generator) -> List[Tuple[Dataset, Dataset]]:
    """(train, test) pairs for k shuffled folds."""
    if k < 2 or k > dataset.d:
        raise ValidationError(f"fold count must lie in [2, {dataset.d}], got {k}")
    folds = np.array_split(rng.permutation(dataset.d), k)
    splits = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        splits.append((dataset.rows(np.sort(train_idx)), dataset.rows(np.sort(test_idx))))
    return splits


def prepare_training(dataset: Dataset, intercepts: bool) -> Tuple[Dataset, Optional[np.ndarray]]:
    """Centre the training rows unless intercepts are modelled; returns (data, offset)."""
    if intercepts:
        return dataset, None
    offset = dataset.column_means()
    return dataset.centered(offset), offset
