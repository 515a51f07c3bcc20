"""Least-squares baseline over the nine features.

Numeric columns are mean-imputed; the categorical cell identifier expands
to one-hot columns with the first level dropped so the intercept absorbs
it.  A rank-deficient design falls back to ridge with lambda = 1e-6 and
the model is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CategoryEncoder, Dataset, fit_imputation


@dataclass
class LinearModel:
    coef: np.ndarray               # over design columns, intercept excluded
    intercept: float
    design_cols: tuple[str, ...]
    feature_names: tuple[str, ...]
    categorical: tuple[int, ...]
    impute_means: np.ndarray
    encoders: dict[int, CategoryEncoder]
    ridge_fallback: bool = False
    params: dict = field(default_factory=dict)
    n_samples: int = 0

    def design(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        cols = []
        for j, name in enumerate(self.feature_names):
            if j in self.encoders:
                codes = self.encoders[j].encode(X[:, j])
                n_codes = self.encoders[j].n_codes
                for code in range(1, n_codes):   # level 0 dropped
                    cols.append((codes == code).astype(np.float64))
            else:
                col = X[:, j].copy()
                col[np.isnan(col)] = self.impute_means[j]
                cols.append(col)
        return np.column_stack(cols)

    def predict(self, X) -> np.ndarray:
        if isinstance(X, Dataset):
            X = X.X
        return self.design(X) @ self.coef + self.intercept


def _design_col_names(feature_names, categorical, encoders) -> tuple[str, ...]:
    names = []
    for j, name in enumerate(feature_names):
        if j in encoders:
            enc = encoders[j]
            for code in range(1, enc.n_codes):
                val = enc.decode(code)
                tag = "missing" if val is None else f"{val:g}"
                names.append(f"{name}={tag}")
        else:
            names.append(name)
    return tuple(names)


def fit_linear(data: Dataset) -> LinearModel:
    means = fit_imputation(data.X, data.categorical)
    encoders = {j: CategoryEncoder.fit(data.X[:, j]) for j in data.categorical}
    model = LinearModel(coef=np.zeros(0), intercept=0.0, design_cols=(),
                        feature_names=data.feature_names,
                        categorical=data.categorical, impute_means=means,
                        encoders=encoders, n_samples=data.n)
    A = model.design(data.X)
    A1 = np.column_stack([np.ones(data.n), A])
    beta, _, rank, _ = np.linalg.lstsq(A1, data.y, rcond=None)
    if rank < A1.shape[1]:
        lam = 1e-6
        gram = A1.T @ A1 + lam * np.eye(A1.shape[1])
        beta = np.linalg.solve(gram, A1.T @ data.y)
        model.ridge_fallback = True
        model.params["ridge_lambda"] = lam
    model.intercept = float(beta[0])
    model.coef = beta[1:]
    model.design_cols = _design_col_names(data.feature_names, data.categorical, encoders)
    return model
