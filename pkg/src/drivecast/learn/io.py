"""Versioned JSON serialization for trained models.

Every payload carries a format tag; loading any other tag fails loudly.
Floats survive the round trip bit-exactly (repr-based JSON encoding), so
a reloaded model predicts byte-identically.  Tree nodes are written in
pre-order with child indices into the node list; categorical splits store
raw cell values (null for the missing-value category) rather than codes.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from ..errors import ModelIOError
from .cart import TreeModel
from .dataset import CategoryEncoder
from .forest import ForestModel
from .linear import LinearModel
from .m5 import M5Model, M5Node

MODEL_FORMAT = "drivecast-model/1"


def _f(x):
    """NaN-safe scalar for JSON."""
    x = float(x)
    return None if math.isnan(x) else x


def _cat_values(encoder: CategoryEncoder, codes) -> list:
    vals = [encoder.decode(c) for c in sorted(codes)]
    return [None if v is None else float(v) for v in vals]


def _cat_codes(encoder: CategoryEncoder, values) -> list[int]:
    out = []
    for v in values:
        if v is None:
            out.append(len(encoder.categories))
        else:
            out.append(encoder.categories.index(float(v)))
    return out


def _envelope(kind: str, model) -> dict:
    return {
        "format": MODEL_FORMAT,
        "kind": kind,
        "feature_names": list(model.feature_names),
        "categorical": list(model.categorical),
        "impute_means": [_f(v) for v in model.impute_means],
        "encoders": {str(j): {"categories": list(e.categories),
                              "has_missing": e.has_missing}
                     for j, e in model.encoders.items()},
        "params": model.params,
        "n_samples": model.n_samples,
    }


def _load_encoders(payload) -> dict[int, CategoryEncoder]:
    return {int(j): CategoryEncoder(categories=tuple(spec["categories"]),
                                    has_missing=bool(spec["has_missing"]))
            for j, spec in payload["encoders"].items()}


def _tree_records(tree: TreeModel) -> list[dict]:
    order = []          # pre-order walk of the flat arrays
    remap = {}
    stack = [0]
    while stack:
        k = stack.pop()
        remap[k] = len(order)
        order.append(k)
        if tree.feature[k] != -1:
            stack.append(int(tree.right[k]))
            stack.append(int(tree.left[k]))
    records = []
    for k in order:
        rec = {"value": float(tree.value[k]), "n": int(tree.n_node[k]),
               "impurity": float(tree.impurity[k])}
        f = int(tree.feature[k])
        if f != -1:
            rec["feature"] = tree.feature_names[f]
            rec["gain"] = float(tree.gain[k])
            rec["default_left"] = bool(tree.default_left[k])
            rec["left"] = remap[int(tree.left[k])]
            rec["right"] = remap[int(tree.right[k])]
            if math.isnan(tree.threshold[k]):
                enc = tree.encoders[f]
                lcodes = [c for c in range(enc.n_codes)
                          if (int(tree.cat_left[k, c >> 6]) >> (c & 63)) & 1]
                pcodes = [c for c in range(enc.n_codes)
                          if (int(tree.cat_present[k, c >> 6]) >> (c & 63)) & 1]
                rec["cats_left"] = _cat_values(enc, lcodes)
                rec["cats_present"] = _cat_values(enc, pcodes)
            else:
                rec["threshold"] = float(tree.threshold[k])
        records.append(rec)
    return records


def _tree_from_records(records, feature_names, categorical, means, encoders,
                       params, n_samples) -> TreeModel:
    n = len(records)
    n_codes = max([e.n_codes for e in encoders.values()] + [1])
    n_words = max(1, (n_codes + 63) // 64)
    tree = TreeModel(
        feature=np.full(n, -1, np.int64), threshold=np.full(n, np.nan),
        left=np.full(n, -1, np.int64), right=np.full(n, -1, np.int64),
        value=np.zeros(n), n_node=np.zeros(n, np.int64),
        impurity=np.zeros(n), gain=np.zeros(n),
        default_left=np.zeros(n, np.uint8),
        cat_left=np.zeros((n, n_words), np.uint64),
        cat_present=np.zeros((n, n_words), np.uint64),
        feature_names=feature_names, categorical=categorical,
        impute_means=means, encoders=encoders, params=params,
        n_samples=n_samples)
    name_to_idx = {nm: i for i, nm in enumerate(feature_names)}
    for i, rec in enumerate(records):
        tree.value[i] = rec["value"]
        tree.n_node[i] = rec["n"]
        tree.impurity[i] = rec["impurity"]
        if "feature" not in rec:
            continue
        f = name_to_idx[rec["feature"]]
        tree.feature[i] = f
        tree.gain[i] = rec["gain"]
        tree.default_left[i] = 1 if rec["default_left"] else 0
        tree.left[i] = rec["left"]
        tree.right[i] = rec["right"]
        if "threshold" in rec:
            tree.threshold[i] = rec["threshold"]
        else:
            enc = encoders[f]
            for c in _cat_codes(enc, rec["cats_left"]):
                tree.cat_left[i, c >> 6] |= np.uint64(1) << np.uint64(c & 63)
            for c in _cat_codes(enc, rec["cats_present"]):
                tree.cat_present[i, c >> 6] |= np.uint64(1) << np.uint64(c & 63)
    return tree


def _m5_records(model: M5Model) -> list[dict]:
    records = []

    def walk(node: M5Node) -> int:
        rec = {"n": node.n, "sd": node.sd,
               "model": {"cols": [model.feature_names[c] for c in node.model_cols],
                         "coef": [float(w) for w in node.coef],
                         "intercept": node.intercept}}
        pos = len(records)
        records.append(rec)
        if not node.is_leaf:
            f = node.feature
            rec["feature"] = model.feature_names[f]
            rec["default_left"] = node.default_left
            if node.cats_left is not None:
                enc = model.encoders[f]
                rec["cats_left"] = _cat_values(enc, sorted(node.cats_left))
                rec["cats_present"] = _cat_values(enc, sorted(node.cats_present))
            else:
                rec["threshold"] = node.threshold
            rec["left"] = walk(node.left)
            rec["right"] = walk(node.right)
        return pos

    walk(model.root)
    return records


def _m5_from_records(records, feature_names, encoders) -> M5Node:
    name_to_idx = {nm: i for i, nm in enumerate(feature_names)}

    def build(i: int) -> M5Node:
        rec = records[i]
        cols = tuple(name_to_idx[nm] for nm in rec["model"]["cols"])
        node = M5Node(n=rec["n"], sd=rec["sd"], model_cols=cols,
                      coef=np.asarray(rec["model"]["coef"], dtype=np.float64),
                      intercept=float(rec["model"]["intercept"]))
        if "feature" in rec:
            f = name_to_idx[rec["feature"]]
            node.feature = f
            node.default_left = bool(rec["default_left"])
            if "threshold" in rec:
                node.threshold = float(rec["threshold"])
            else:
                enc = encoders[f]
                node.cats_left = frozenset(_cat_codes(enc, rec["cats_left"]))
                node.cats_present = frozenset(_cat_codes(enc, rec["cats_present"]))
            node.left = build(rec["left"])
            node.right = build(rec["right"])
        return node

    return build(0)


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        d = _envelope("linear", model)
        d["coef"] = [float(w) for w in model.coef]
        d["intercept"] = model.intercept
        d["design_cols"] = list(model.design_cols)
        d["ridge_fallback"] = model.ridge_fallback
        return d
    if isinstance(model, TreeModel):
        d = _envelope("cart", model)
        d["nodes"] = _tree_records(model)
        return d
    if isinstance(model, ForestModel):
        d = _envelope("forest", model)
        d["trees"] = [{"nodes": _tree_records(t), "params": t.params,
                       "n_samples": t.n_samples} for t in model.trees]
        return d
    if isinstance(model, M5Model):
        d = _envelope("m5", model)
        d["nodes"] = _m5_records(model)
        d["smoothing_k"] = model.smoothing_k
        d["pruning_record"] = model.pruning_record
        return d
    raise ModelIOError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ModelIOError(
            f"unsupported model format {d.get('format') if isinstance(d, dict) else d!r}; "
            f"expected {MODEL_FORMAT}")
    try:
        kind = d["kind"]
        feature_names = tuple(d["feature_names"])
        categorical = tuple(d["categorical"])
        means = np.array([np.nan if v is None else v for v in d["impute_means"]])
        encoders = _load_encoders(d)
        params = d.get("params", {})
        n_samples = int(d.get("n_samples", 0))
        if kind == "linear":
            return LinearModel(coef=np.asarray(d["coef"], dtype=np.float64),
                               intercept=float(d["intercept"]),
                               design_cols=tuple(d["design_cols"]),
                               feature_names=feature_names,
                               categorical=categorical, impute_means=means,
                               encoders=encoders,
                               ridge_fallback=bool(d["ridge_fallback"]),
                               params=params, n_samples=n_samples)
        if kind == "cart":
            return _tree_from_records(d["nodes"], feature_names, categorical,
                                      means, encoders, params, n_samples)
        if kind == "forest":
            trees = [_tree_from_records(t["nodes"], feature_names, categorical,
                                        means, encoders, t.get("params", {}),
                                        int(t.get("n_samples", 0)))
                     for t in d["trees"]]
            return ForestModel(trees=trees, feature_names=feature_names,
                               categorical=categorical, impute_means=means,
                               encoders=encoders, params=params,
                               n_samples=n_samples)
        if kind == "m5":
            root = _m5_from_records(d["nodes"], feature_names, encoders)
            return M5Model(root=root, smoothing_k=float(d["smoothing_k"]),
                           feature_names=feature_names, categorical=categorical,
                           impute_means=means, encoders=encoders, params=params,
                           pruning_record=d.get("pruning_record", {}),
                           n_samples=n_samples)
        raise ModelIOError(f"unknown model kind {kind!r}")
    except ModelIOError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelIOError(f"corrupt model payload: {exc}") from exc


def save_model(model, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelIOError(f"cannot read model from {path}: {exc}") from exc
    return model_from_dict(payload)
