"""Feature-matrix view of labeled samples, with explicit missing values.

The matrix keeps the fixed nine-column ordering from drivecast.trace.
Missing entries are NaN; the cell_id column holds raw cell identifiers and
is treated as categorical by every learner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..trace import CELL_ID_INDEX, FEATURE_NAMES, LabeledSample


@dataclass
class Dataset:
    X: np.ndarray                       # (n, d) float64, NaN = missing
    y: np.ndarray                       # (n,) float64
    feature_names: tuple[str, ...] = FEATURE_NAMES
    categorical: tuple[int, ...] = (CELL_ID_INDEX,)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValidationError("X and y row counts differ")
        if self.X.shape[0] < 1:
            raise ValidationError("dataset is empty")
        if self.X.shape[1] != len(self.feature_names):
            raise ValidationError("column count does not match feature names")
        if not np.all(np.isfinite(self.y)):
            raise ValidationError("labels contain non-finite values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_samples(cls, samples: list[LabeledSample]) -> "Dataset":
        if not samples:
            raise ValidationError("no samples")
        X = np.vstack([s.features.as_array() for s in samples])
        y = np.array([s.label for s in samples], dtype=np.float64)
        return cls(X=X, y=y)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(X=self.X[indices], y=self.y[indices],
                       feature_names=self.feature_names, categorical=self.categorical)


@dataclass(frozen=True)
class CategoryEncoder:
    """Maps raw categorical values to dense codes 0..n_codes-1.

    Missing values seen at fit time get their own trailing code; values
    unseen at fit time (or missing when none were seen) encode to -1 and
    are routed by each node's majority branch at prediction time.
    """

    categories: tuple[float, ...]
    has_missing: bool

    @property
    def n_codes(self) -> int:
        return len(self.categories) + (1 if self.has_missing else 0)

    @classmethod
    def fit(cls, col: np.ndarray) -> "CategoryEncoder":
        finite = col[~np.isnan(col)]
        return cls(categories=tuple(float(v) for v in np.unique(finite)),
                   has_missing=bool(np.isnan(col).any()))

    def encode(self, col: np.ndarray) -> np.ndarray:
        col = np.asarray(col, dtype=np.float64)
        out = np.full(col.shape, -1, dtype=np.int64)
        cats = np.asarray(self.categories)
        if cats.size:
            codes = np.clip(np.searchsorted(cats, col), 0, cats.size - 1)
            known = ~np.isnan(col)
            known &= cats[codes] == np.where(known, col, 0.0)
            out[known] = codes[known]
        if self.has_missing:
            out[np.isnan(col)] = cats.size
        return out

    def decode(self, code: int) -> float | None:
        if 0 <= code < len(self.categories):
            return self.categories[code]
        return None   # the synthetic "missing" category


def fit_imputation(X: np.ndarray, categorical: tuple[int, ...]) -> np.ndarray:
    """Per-column training means for numeric columns (NaN for categorical).

    An all-missing numeric column imputes to 0.0 so predict stays total.
    """
    means = np.full(X.shape[1], np.nan)
    for j in range(X.shape[1]):
        if j in categorical:
            continue
        col = X[:, j]
        finite = col[~np.isnan(col)]
        means[j] = finite.mean() if finite.size else 0.0
    return means


def prepare_matrix(X: np.ndarray, means: np.ndarray,
                   encoders: dict[int, CategoryEncoder]) -> np.ndarray:
    """Imputed copy of X with categorical columns replaced by integer codes."""
    out = np.array(X, dtype=np.float64, copy=True)
    for j in range(out.shape[1]):
        if j in encoders:
            out[:, j] = encoders[j].encode(X[:, j]).astype(np.float64)
        else:
            col = out[:, j]
            col[np.isnan(col)] = means[j]
    return out


def check_feature_names(names, expected) -> None:
    if tuple(names) != tuple(expected):
        raise ValidationError(
            f"feature ordering mismatch: expected {tuple(expected)}, got {tuple(names)}")
