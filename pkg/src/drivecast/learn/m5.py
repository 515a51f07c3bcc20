"""Model tree: standard-deviation-reduction splits, linear leaves.

Growth reuses the tree kernel with the sd-reduction criterion and stops
at nodes smaller than min_split or with sd below sdr_stop times the root
sd.  Every node gets a least-squares model over the numeric features
appearing in its subtree's splits (intercept only at grown leaves).  A
node is pruned to a leaf when its own model's estimated error, MAE scaled
by (n + p) / (n - p) for p parameters, does not exceed the size-weighted
estimate of its children.  Prediction walks to a leaf and smooths back
toward the root: p = (n_child * p + k * q_parent) / (n_child + k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from . import _kernels
from .cart import grow
from .dataset import CategoryEncoder, Dataset, fit_imputation, prepare_matrix


@dataclass
class M5Node:
    n: int
    sd: float
    model_cols: tuple[int, ...]
    coef: np.ndarray
    intercept: float
    feature: int | None = None        # None marks a leaf
    threshold: float | None = None
    cats_left: frozenset | None = None
    cats_present: frozenset | None = None
    default_left: bool = True
    left: "M5Node | None" = None
    right: "M5Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def model_value(self, row: np.ndarray) -> float:
        v = self.intercept
        for c, w in zip(self.model_cols, self.coef):
            v += w * row[c]
        return v


@dataclass
class M5Model:
    root: M5Node
    smoothing_k: float
    feature_names: tuple[str, ...]
    categorical: tuple[int, ...]
    impute_means: np.ndarray
    encoders: dict[int, CategoryEncoder]
    params: dict = field(default_factory=dict)
    pruning_record: dict = field(default_factory=dict)
    n_samples: int = 0

    @property
    def n_leaves(self) -> int:
        def count(node):
            return 1 if node.is_leaf else count(node.left) + count(node.right)
        return count(self.root)

    def predict(self, X) -> np.ndarray:
        if isinstance(X, Dataset):
            X = X.X
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Xp = prepare_matrix(X, self.impute_means, self.encoders)
        out = np.empty(Xp.shape[0], dtype=np.float64)
        for r in range(Xp.shape[0]):
            out[r] = self._predict_row(Xp[r])
        return out

    def _predict_row(self, row: np.ndarray) -> float:
        path = []
        node = self.root
        while not node.is_leaf:
            path.append(node)
            if node.cats_left is not None:
                code = int(row[node.feature])
                if code >= 0 and code in node.cats_present:
                    node = node.left if code in node.cats_left else node.right
                else:
                    node = node.left if node.default_left else node.right
            else:
                node = node.left if row[node.feature] <= node.threshold else node.right
        p = node.model_value(row)
        child = node
        for parent in reversed(path):
            p = (child.n * p + self.smoothing_k * parent.model_value(row)) / (
                child.n + self.smoothing_k)
            child = parent
        return p


def _collect_rows(arrays, Xp):
    """Row-index sets per kernel node, replaying each split."""
    feature, threshold, left, right = arrays[0], arrays[1], arrays[2], arrays[3]
    cat_left = arrays[9]
    rows = {0: np.arange(Xp.shape[0])}
    order = [0]
    for node in order:
        f = feature[node]
        if f == _kernels.LEAF:
            continue
        r = rows[node]
        if np.isnan(threshold[node]):
            codes = Xp[r, f].astype(np.int64)
            bit = (cat_left[node, codes >> 6] >> (codes & 63).astype(np.uint64)) & 1
            mask = bit.astype(bool)
        else:
            mask = Xp[r, f] <= threshold[node]
        rows[int(left[node])] = r[mask]
        rows[int(right[node])] = r[~mask]
        order.append(int(left[node]))
        order.append(int(right[node]))
    return rows


def _fit_node_model(Xp, y, rows, cols):
    A = np.column_stack([np.ones(len(rows))] + [Xp[rows, c] for c in cols])
    beta, _, _, _ = np.linalg.lstsq(A, y[rows], rcond=None)
    return float(beta[0]), beta[1:]


def _estimated_error(Xp, y, rows, node: M5Node) -> float:
    n = len(rows)
    p = 1 + len(node.model_cols)
    if n <= p:
        return np.inf
    pred = node.intercept + Xp[rows][:, node.model_cols] @ node.coef \
        if node.model_cols else np.full(n, node.intercept)
    mae = float(np.mean(np.abs(y[rows] - pred)))
    if mae < 1e-12 * (1.0 + float(np.mean(np.abs(y[rows])))):
        mae = 0.0               # exact fit up to rounding
    return mae * (n + p) / (n - p)


def fit_m5(data: Dataset, min_split: int = 4, sdr_stop: float = 0.05,
           smoothing_k: float = 15.0) -> M5Model:
    """smoothing_k=0 disables path smoothing (raw leaf models)."""
    if min_split < 2:
        raise ValidationError("min_split must be >= 2")
    if not 0.0 <= sdr_stop:
        raise ValidationError("sdr_stop must be >= 0")
    if smoothing_k < 0:
        raise ValidationError("smoothing_k must be >= 0")
    means = fit_imputation(data.X, data.categorical)
    encoders = {j: CategoryEncoder.fit(data.X[:, j]) for j in data.categorical}
    Xp = prepare_matrix(data.X, means, encoders)
    is_cat = np.zeros(data.d, dtype=np.bool_)
    is_cat[list(data.categorical)] = True
    n_codes = max([e.n_codes for e in encoders.values()] + [1])
    root_sd = float(np.std(data.y))
    arrays = grow(Xp, data.y, is_cat, n_codes, 2, min_split, None,
                  data.d, 0, 1, sdr_stop * root_sd)
    feature, threshold = arrays[0], arrays[1]
    left, right = arrays[2], arrays[3]
    n_node, impurity = arrays[5], arrays[6]
    cat_left, cat_present = arrays[9], arrays[10]
    rows = _collect_rows(arrays, Xp)

    cat_set = set(data.categorical)

    def build(k: int) -> tuple[M5Node, set, int]:
        """Returns (node, subtree split features, grown leaf count)."""
        f = int(feature[k])
        if f == _kernels.LEAF:
            node = M5Node(n=int(n_node[k]), sd=float(np.sqrt(impurity[k])),
                          model_cols=(), coef=np.zeros(0), intercept=0.0)
            node.intercept, node.coef = _fit_node_model(Xp, data.y, rows[k], ())
            return node, set(), 1
        lnode, lfeats, lleaves = build(int(left[k]))
        rnode, rfeats, rleaves = build(int(right[k]))
        feats = lfeats | rfeats
        if f not in cat_set:
            feats = feats | {f}
        cols = tuple(sorted(feats))
        node = M5Node(n=int(n_node[k]), sd=float(np.sqrt(impurity[k])),
                      model_cols=cols, coef=np.zeros(len(cols)), intercept=0.0,
                      feature=f,
                      threshold=None if np.isnan(threshold[k]) else float(threshold[k]),
                      default_left=bool(arrays[8][k]),
                      left=lnode, right=rnode)
        if np.isnan(threshold[k]):
            lcodes, pcodes = [], []
            for code in range(n_codes):
                if (int(cat_left[k, code >> 6]) >> (code & 63)) & 1:
                    lcodes.append(code)
                if (int(cat_present[k, code >> 6]) >> (code & 63)) & 1:
                    pcodes.append(code)
            node.cats_left = frozenset(lcodes)
            node.cats_present = frozenset(pcodes)
        node.intercept, node.coef = _fit_node_model(Xp, data.y, rows[k], cols)
        return node, feats, lleaves + rleaves

    node_of = {}

    def attach_rows(node: M5Node, k: int):
        node_of[id(node)] = k
        if not node.is_leaf:
            attach_rows(node.left, int(left[k]))
            attach_rows(node.right, int(right[k]))

    root, _, leaves_grown = build(0)
    attach_rows(root, 0)

    pruned = [0]

    def prune(node: M5Node) -> float:
        k = node_of[id(node)]
        own = _estimated_error(Xp, data.y, rows[k], node)
        if node.is_leaf:
            return own
        sub = (node.left.n * prune(node.left) + node.right.n * prune(node.right)) / node.n
        if own <= sub:
            node.feature = None
            node.threshold = None
            node.cats_left = None
            node.cats_present = None
            node.left = None
            node.right = None
            pruned[0] += 1
            return own
        return sub

    prune(root)
    model = M5Model(root=root, smoothing_k=float(smoothing_k),
                    feature_names=data.feature_names,
                    categorical=data.categorical, impute_means=means,
                    encoders=encoders,
                    params={"min_split": min_split, "sdr_stop": sdr_stop,
                            "smoothing_k": smoothing_k},
                    n_samples=data.n)
    model.pruning_record = {"leaves_grown": leaves_grown,
                            "nodes_pruned": pruned[0],
                            "leaves_after": model.n_leaves}
    return model
