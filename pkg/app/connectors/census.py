"""
Connector for census-style tabular data.

Reads a comma-separated CSV, drops configured columns and rows with missing
markers, integer-encodes categoricals by first appearance and min-max scales
features to [0, 1] with statistics of the training rows only.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.core.errors import DatasetError
from app.models.dataset import DatasetRecipe

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinMaxScaler:
    minimum: np.ndarray
    maximum: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "MinMaxScaler":
        features = np.asarray(features, dtype=float)
        return cls(features.min(axis=0), features.max(axis=0))

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Scale to [0, 1], clamping out-of-range rows; constant columns map to 0."""
        features = np.asarray(features, dtype=float)
        span = self.maximum - self.minimum
        safe = np.where(span > 0, span, 1.0)
        scaled = np.where(span > 0, (features - self.minimum) / safe, 0.0)
        return np.clip(scaled, 0.0, 1.0)


@dataclass
class TabularDataset:
    """Encoded (unscaled) feature matrix with binary labels."""
    feature_names: List[str]
    kinds: Dict[str, str]
    raw: np.ndarray
    labels: np.ndarray
    categories: Dict[str, List[str]] = field(default_factory=dict)
    scaler: Optional[MinMaxScaler] = None

    def __len__(self) -> int:
        return self.raw.shape[0]

    @property
    def d(self) -> int:
        return self.raw.shape[1]

    @property
    def features(self) -> np.ndarray:
        """Features scaled with the attached scaler (fitted on this data when absent)."""
        scaler = self.scaler or MinMaxScaler.fit(self.raw)
        return scaler.transform(self.raw)

    def subset(self, rows: Sequence[int], scaler: Optional[MinMaxScaler] = None) -> "TabularDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return TabularDataset(self.feature_names, self.kinds, self.raw[rows], self.labels[rows],
                              self.categories, scaler)


def _read(source: Union[str, Path, pd.DataFrame], recipe: DatasetRecipe) -> pd.DataFrame:
    if isinstance(source, pd.DataFrame):
        return source.copy()
    path = Path(source)
    if not path.is_file():
        raise DatasetError(f"CSV file not found: {path}")
    try:
        if recipe.column_names:
            return pd.read_csv(path, header=None, names=recipe.column_names, skipinitialspace=True,
                               dtype=str, keep_default_na=False)
        return pd.read_csv(path, skipinitialspace=True, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DatasetError(f"Failed to read {path}: {e}")


def load_and_preprocess(source: Union[str, Path, pd.DataFrame],
                        recipe: Optional[DatasetRecipe] = None) -> TabularDataset:
    recipe = recipe or DatasetRecipe.census()
    frame = _read(source, recipe)
    frame.columns = [str(c).strip() for c in frame.columns]
    frame = frame.apply(lambda column: column.astype(str).str.strip())

    unknown = [c for c in recipe.drop_columns + [recipe.label_column] if c not in frame.columns]
    if unknown:
        raise DatasetError(f"Unknown column(s): {', '.join(unknown)}")
    frame = frame.drop(columns=recipe.drop_columns)

    missing = (frame == recipe.missing_marker) | (frame == "")
    before = len(frame)
    frame = frame[~missing.any(axis=1)].reset_index(drop=True)
    if frame.empty:
        raise DatasetError("No rows left after removing missing values")
    logger.info("Dropped %d of %d rows with missing values", before - len(frame), before)

    labels = frame.pop(recipe.label_column).isin(recipe.positive_labels).astype(np.int64).to_numpy()
    if recipe.categorical_columns is not None:
        absent = [c for c in recipe.categorical_columns if c not in frame.columns]
        if absent:
            raise DatasetError(f"Unknown categorical column(s): {', '.join(absent)}")
        categorical = set(recipe.categorical_columns)
    else:
        categorical = {c for c in frame.columns if pd.to_numeric(frame[c], errors="coerce").isna().any()}

    kinds: Dict[str, str] = {}
    categories: Dict[str, List[str]] = {}
    encoded = {}
    for column in frame.columns:
        if column in categorical:
            codes, uniques = pd.factorize(frame[column])
            encoded[column] = codes.astype(float)
            categories[column] = [str(v) for v in uniques]
            kinds[column] = "categorical"
        else:
            encoded[column] = pd.to_numeric(frame[column], errors="raise").astype(float).to_numpy()
            kinds[column] = "numeric"
    names = list(frame.columns)
    raw = np.column_stack([encoded[c] for c in names]) if names else np.zeros((len(frame), 0))
    logger.info("Loaded %d rows, %d features (%d categorical)", raw.shape[0], raw.shape[1],
                len(categories))
    return TabularDataset(names, kinds, raw, labels, categories, MinMaxScaler.fit(raw))


def split(dataset: TabularDataset, train_fraction: float = 0.8,
          seed=None) -> Tuple[TabularDataset, TabularDataset]:
    """Seeded shuffle, floor(fraction * n) training rows; both parts use training statistics."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must lie in (0, 1), got {train_fraction}")
    order = np.random.default_rng(seed).permutation(len(dataset))
    cut = int(np.floor(train_fraction * len(dataset)))
    train_rows, test_rows = order[:cut], order[cut:]
    scaler = MinMaxScaler.fit(dataset.raw[train_rows])
    return dataset.subset(train_rows, scaler), dataset.subset(test_rows, scaler)


def kfold(dataset: Union[TabularDataset, int], k: int = 10, seed=None) -> List[Tuple[np.ndarray, np.ndarray]]:
    """k near-equal disjoint test folds of a seeded permutation, each with the remaining rows as train."""
    n = dataset if isinstance(dataset, int) else len(dataset)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise DatasetError(f"cannot make {k} folds out of {n} rows")
    folds = np.array_split(np.random.default_rng(seed).permutation(n), k)
    return [(np.concatenate(folds[:i] + folds[i + 1:]), folds[i]) for i in range(k)]


def fold_datasets(dataset: TabularDataset, train_rows: np.ndarray,
                  test_rows: np.ndarray) -> Tuple[TabularDataset, TabularDataset]:
    scaler = MinMaxScaler.fit(dataset.raw[train_rows])
    return dataset.subset(train_rows, scaler), dataset.subset(test_rows, scaler)
