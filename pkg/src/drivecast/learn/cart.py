"""Single regression tree grown by exhaustive variance-reduction search.

Splits minimize the size-weighted sum of child variances, equivalently
maximize gain = (sl^2/nl + sr^2/nr - s^2/m) / m over left prefix sums.
Numeric thresholds are midpoints between consecutive distinct sorted
values; rows with x <= threshold go left.  Categorical splits order the
node's codes by mean label (by frequency above 32 distinct) and scan
prefixes.  Growth stops when no split has positive gain, when a node has
fewer than 2*min_leaf rows, or at max_depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from . import _kernels
from .dataset import CategoryEncoder, Dataset, fit_imputation, prepare_matrix


@dataclass
class TreeModel:
    feature: np.ndarray            # int64, -1 at leaves
    threshold: np.ndarray          # float64, NaN at leaves and categorical splits
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray              # mean label of the node's training rows
    n_node: np.ndarray
    impurity: np.ndarray           # biased variance of the node's labels
    gain: np.ndarray               # chosen split gain, 0 at leaves
    default_left: np.ndarray       # uint8 majority branch per split node
    cat_left: np.ndarray           # (nodes, words) uint64 bitsets
    cat_present: np.ndarray
    feature_names: tuple[str, ...]
    categorical: tuple[int, ...]
    impute_means: np.ndarray
    encoders: dict[int, CategoryEncoder]
    params: dict = field(default_factory=dict)
    n_samples: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == _kernels.LEAF))

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != _kernels.LEAF:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.n_nodes else 0

    def _is_cat_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.feature_names), dtype=np.bool_)
        mask[list(self.categorical)] = True
        return mask

    def prepared(self, X: np.ndarray) -> np.ndarray:
        return prepare_matrix(np.atleast_2d(X), self.impute_means, self.encoders)

    def predict(self, X) -> np.ndarray:
        if isinstance(X, Dataset):
            X = X.X
        Xp = self.prepared(np.asarray(X, dtype=np.float64))
        out = np.empty(Xp.shape[0], dtype=np.float64)
        _kernels.predict_tree(self.feature, self.threshold, self.left,
                              self.right, self.value, self.default_left,
                              self.cat_left, self.cat_present,
                              self._is_cat_mask(), Xp, out)
        return out

    def predict_prepared(self, Xp: np.ndarray) -> np.ndarray:
        out = np.empty(Xp.shape[0], dtype=np.float64)
        _kernels.predict_tree(self.feature, self.threshold, self.left,
                              self.right, self.value, self.default_left,
                              self.cat_left, self.cat_present,
                              self._is_cat_mask(), Xp, out)
        return out

    def split_cats_left(self, node: int) -> list[float]:
        """Raw categorical values routed left at a split node."""
        f = int(self.feature[node])
        enc = self.encoders[f]
        out = []
        for code in range(enc.n_codes):
            w, b = code >> 6, code & 63
            if (int(self.cat_left[node, w]) >> b) & 1:
                val = enc.decode(code)
                out.append(float("nan") if val is None else val)
        return out


def grow(X: np.ndarray, y: np.ndarray, is_cat: np.ndarray, n_codes: int,
         min_leaf: int, min_node: int, max_depth: int | None, mtry: int,
         seed: int, criterion: int, sd_floor: float):
    depth_arg = -1 if max_depth is None else int(max_depth)
    return _kernels.grow_tree(X, y, is_cat, n_codes, min_leaf, min_node,
                              depth_arg, mtry, seed, criterion, sd_floor)


def fit_cart(data: Dataset, min_leaf: int = 1, max_depth: int | None = None) -> TreeModel:
    """Deterministic: every feature is scanned at every node."""
    if min_leaf < 1:
        raise ValidationError("min_leaf must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ValidationError("max_depth must be >= 0")
    means = fit_imputation(data.X, data.categorical)
    encoders = {j: CategoryEncoder.fit(data.X[:, j]) for j in data.categorical}
    Xp = prepare_matrix(data.X, means, encoders)
    is_cat = np.zeros(data.d, dtype=np.bool_)
    is_cat[list(data.categorical)] = True
    n_codes = max([e.n_codes for e in encoders.values()] + [1])
    arrays = grow(Xp, data.y, is_cat, n_codes, min_leaf, 2, max_depth,
                  data.d, 0, 0, 0.0)
    return TreeModel(*arrays, feature_names=data.feature_names,
                     categorical=data.categorical, impute_means=means,
                     encoders=encoders,
                     params={"min_leaf": min_leaf, "max_depth": max_depth},
                     n_samples=data.n)


def leaf_count(model) -> int:
    """Leaves of a tree, summed over members for an ensemble."""
    if hasattr(model, "trees"):
        return sum(t.n_leaves for t in model.trees)
    if hasattr(model, "n_leaves"):
        return model.n_leaves
    raise ValidationError(f"leaf_count undefined for {type(model).__name__}")
