"""Bagged ensemble of variance-reduction trees.

Each tree trains on a bootstrap sample of n rows and considers a fresh
uniform subset of features_per_split features at every node.  Per-tree
randomness comes from independent child seeds spawned from the ensemble
seed, so results do not depend on fitting order.  Predictions average the
member trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .cart import TreeModel, grow
from .dataset import CategoryEncoder, Dataset, fit_imputation, prepare_matrix


@dataclass
class ForestModel:
    trees: list[TreeModel]
    feature_names: tuple[str, ...]
    categorical: tuple[int, ...]
    impute_means: np.ndarray
    encoders: dict[int, CategoryEncoder]
    params: dict = field(default_factory=dict)
    n_samples: int = 0

    @property
    def n_leaves(self) -> int:
        return sum(t.n_leaves for t in self.trees)

    def predict(self, X) -> np.ndarray:
        if isinstance(X, Dataset):
            X = X.X
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Xp = prepare_matrix(X, self.impute_means, self.encoders)
        acc = np.zeros(Xp.shape[0], dtype=np.float64)
        for t in self.trees:
            acc += t.predict_prepared(Xp)
        return acc / len(self.trees)


def fit_forest(data: Dataset, n_trees: int = 100, min_leaf: int = 5,
               features_per_split: int | None = None,
               max_depth: int | None = None, seed: int = 0,
               bootstrap: bool = True, n_jobs: int = 1) -> ForestModel:
    """features_per_split defaults to floor(d / 3), at least 1.

    bootstrap=False trains every tree on the full sample (with n_trees=1
    and features_per_split=d this reproduces fit_cart exactly).  n_jobs is
    accepted for interface stability; growth is compiled and sequential.
    """
    if n_trees < 1:
        raise ValidationError("n_trees must be >= 1")
    if min_leaf < 1:
        raise ValidationError("min_leaf must be >= 1")
    mtry = features_per_split if features_per_split is not None else max(1, data.d // 3)
    if not 1 <= mtry <= data.d:
        raise ValidationError(f"features_per_split must be in 1..{data.d}")

    means = fit_imputation(data.X, data.categorical)
    encoders = {j: CategoryEncoder.fit(data.X[:, j]) for j in data.categorical}
    Xp = prepare_matrix(data.X, means, encoders)
    is_cat = np.zeros(data.d, dtype=np.bool_)
    is_cat[list(data.categorical)] = True
    n_codes = max([e.n_codes for e in encoders.values()] + [1])

    children = np.random.SeedSequence(seed).spawn(n_trees)
    params = {"n_trees": n_trees, "min_leaf": min_leaf,
              "features_per_split": mtry, "max_depth": max_depth,
              "seed": seed, "bootstrap": bootstrap}
    trees = []
    for child in children:
        rng = np.random.default_rng(child)
        kernel_seed = int(rng.integers(0, 2**63 - 1))
        if bootstrap:
            rows = rng.integers(0, data.n, size=data.n)
            Xb, yb = Xp[rows], data.y[rows]
        else:
            Xb, yb = Xp, data.y
        arrays = grow(Xb, yb, is_cat, n_codes, min_leaf, 2, max_depth,
                      mtry, kernel_seed, 0, 0.0)
        trees.append(TreeModel(*arrays, feature_names=data.feature_names,
                               categorical=data.categorical,
                               impute_means=means, encoders=encoders,
                               params={"min_leaf": min_leaf, "max_depth": max_depth},
                               n_samples=len(yb)))
    return ForestModel(trees=trees, feature_names=data.feature_names,
                       categorical=data.categorical, impute_means=means,
                       encoders=encoders, params=params, n_samples=data.n)
