"""Evaluation harness: metrics, cross-validation, aggregation studies,
cross train/test matrices, feature importance, binned impact, ECDFs.

Cross-validation scores pooled out-of-fold predictions with one R²/MAE
computation (stable for small groups); per-fold means are also reported
for comparison.  Groups too small for k folds (N < 2k) are dropped and
reported, never silently merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .learn import fit_cart, fit_forest, fit_linear, fit_m5
from .learn.dataset import Dataset
from .trace import FEATURE_NAMES, LabeledSample

AGGREGATION_LEVELS = ("mno", "scenario", "enb", "cell")


@dataclass
class PredictionSet:
    actuals: np.ndarray
    predictions: np.ndarray

    def __post_init__(self):
        self.actuals = np.asarray(self.actuals, dtype=np.float64)
        self.predictions = np.asarray(self.predictions, dtype=np.float64)
        if self.actuals.shape != self.predictions.shape or self.actuals.ndim != 1:
            raise ValidationError("actuals and predictions must be equal-length vectors")
        if self.actuals.size < 1:
            raise ValidationError("empty prediction set")
        if not (np.all(np.isfinite(self.actuals)) and np.all(np.isfinite(self.predictions))):
            raise ValidationError("prediction sets must be finite")

    @property
    def n(self) -> int:
        return self.actuals.size


def _as_ps(a, b=None) -> PredictionSet:
    return a if isinstance(a, PredictionSet) else PredictionSet(a, b)


def r_squared(actuals, predictions=None) -> float:
    """1 - SSres/SStot; <= 1, may be negative, errors on constant actuals."""
    ps = _as_ps(actuals, predictions)
    if ps.n < 2:
        raise ValidationError("R^2 needs at least 2 points")
    ybar = ps.actuals.mean()
    ss_tot = float(np.sum((ps.actuals - ybar) ** 2))
    if ss_tot == 0.0:
        raise ValidationError("R^2 undefined for constant actuals (zero variance)")
    ss_res = float(np.sum((ps.predictions - ps.actuals) ** 2))
    return 1.0 - ss_res / ss_tot


def mae(actuals, predictions=None) -> float:
    ps = _as_ps(actuals, predictions)
    return float(np.mean(np.abs(ps.predictions - ps.actuals)))


def kfold(data, k: int = 10, seed: int = 0) -> list:
    """Seeded shuffle split into k disjoint test folds (sizes differ <= 1);
    returns [(train_idx, test_idx)].  data: Dataset or row count."""
    n = data if isinstance(data, (int, np.integer)) else data.n
    if k < 2:
        raise ValidationError("k must be >= 2")
    if n < k:
        raise ValidationError(f"cannot make {k} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, k)
    out = []
    for i in range(k):
        train = np.concatenate([p for j, p in enumerate(parts) if j != i])
        out.append((np.sort(train), np.sort(parts[i])))
    return out


def _group_key(sample: LabeledSample, level: str):
    if level == "mno":
        return (sample.mno,)
    if level == "scenario":
        return (sample.mno, sample.scenario)
    if level == "enb":
        return (sample.mno, sample.enb_id)
    if level == "cell":
        return (sample.mno, sample.cell_id)
    raise ValidationError(f"unknown aggregation level {level!r}; "
                          f"expected one of {AGGREGATION_LEVELS}")


@dataclass
class AggregateResult:
    level: str
    groups: list                      # [(key, Dataset)]
    group_samples: dict               # key -> list[LabeledSample]
    dropped: list                     # [(key, n)] too small for k folds


def aggregate(samples: list, level: str, k: int = 10) -> AggregateResult:
    """Partition samples by aggregation key; groups with N < 2k cannot be
    cross-validated and are dropped (reported in .dropped)."""
    if not samples:
        raise ValidationError("no samples to aggregate")
    buckets = {}
    for s in samples:
        buckets.setdefault(_group_key(s, level), []).append(s)
    groups, dropped, group_samples = [], [], {}
    for key in sorted(buckets, key=lambda t: tuple(str(x) for x in t)):
        rows = buckets[key]
        if len(rows) < 2 * k:
            dropped.append((key, len(rows)))
            continue
        groups.append((key, Dataset.from_samples(rows)))
        group_samples[key] = rows
    return AggregateResult(level=level, groups=groups,
                           group_samples=group_samples, dropped=dropped)


LEARNERS = ("linear", "cart", "rf", "m5")


def make_learner(spec: str, **params):
    """fit(data, seed) closure for a learner named linear|cart|rf|m5."""
    if spec == "linear":
        return lambda data, seed=0: fit_linear(data)
    if spec == "cart":
        return lambda data, seed=0: fit_cart(data, **params)
    if spec == "rf":
        return lambda data, seed=0: fit_forest(data, seed=seed, **params)
    if spec == "m5":
        return lambda data, seed=0: fit_m5(data, **params)
    raise ValidationError(f"unknown learner {spec!r}; expected one of {LEARNERS}")


@dataclass
class EvalReport:
    learner: str
    n: int
    k: int
    r2: float                          # pooled out-of-fold
    mae: float
    r2_fold_mean: float | None = None  # mean of per-fold R² (comparison only)
    folds: list = field(default_factory=list)   # (fold, n_test, r2 | None, mae)
    key: tuple | None = None


def _resolve_learner(learner, params):
    if callable(learner):
        return learner, getattr(learner, "__name__", "custom")
    return make_learner(learner, **(params or {})), learner


def cross_validate(learner, data: Dataset, k: int = 10, seed: int = 0,
                   learner_params: dict | None = None) -> EvalReport:
    """Pooled out-of-fold scoring; fold detail and per-fold mean included."""
    fit, name = _resolve_learner(learner, learner_params)
    folds = kfold(data, k=k, seed=seed)
    fold_seeds = [int(s.generate_state(1)[0] >> 1)
                  for s in np.random.SeedSequence(seed).spawn(k)]
    pooled = np.empty(data.n, dtype=np.float64)
    detail = []
    fold_r2 = []
    for i, (tr, te) in enumerate(folds):
        model = fit(data.subset(tr), seed=fold_seeds[i])
        pred = model.predict(data.subset(te))
        pooled[te] = pred
        try:
            fr2 = r_squared(data.y[te], pred)
            fold_r2.append(fr2)
        except ValidationError:
            fr2 = None
        detail.append((i, len(te), fr2, mae(data.y[te], pred)))
    return EvalReport(learner=name, n=data.n, k=k,
                      r2=r_squared(data.y, pooled), mae=mae(data.y, pooled),
                      r2_fold_mean=float(np.mean(fold_r2)) if fold_r2 else None,
                      folds=detail)


@dataclass
class MatrixResult:
    keys: list
    r2: np.ndarray                     # [train, test]
    learner: str


def train_test_matrix(groups: list, learner, k: int = 10, seed: int = 0,
                      learner_params: dict | None = None) -> MatrixResult:
    """Diagonal: k-fold cross-validation inside the group.  Off-diagonal
    (r, c): train once on all of group r, evaluate on all of group c."""
    if len(groups) < 2:
        raise ValidationError("need at least 2 groups for a train/test matrix")
    fit, name = _resolve_learner(learner, learner_params)
    keys = [key for key, _ in groups]
    n = len(groups)
    out = np.full((n, n), np.nan)
    row_seeds = [int(s.generate_state(1)[0] >> 1)
                 for s in np.random.SeedSequence(seed).spawn(n)]
    for r, (_, dtrain) in enumerate(groups):
        model = fit(dtrain, seed=row_seeds[r])
        for c, (_, dtest) in enumerate(groups):
            if r == c:
                out[r, c] = cross_validate(learner, dtrain, k=k, seed=seed,
                                           learner_params=learner_params).r2
            else:
                out[r, c] = r_squared(dtest.y, model.predict(dtest))
    return MatrixResult(keys=keys, r2=out, learner=name)


def mdi(forest) -> np.ndarray:
    """Mean decrease of impurity per feature: sum over split nodes of
    (n_node/N) * variance decrease, averaged over trees, normalized to 1.
    Features absent from every split get exactly 0."""
    if not getattr(forest, "trees", None):
        raise ValidationError("mdi needs a trained forest")
    d = len(forest.feature_names)
    acc = np.zeros(d)
    for tree in forest.trees:
        contrib = np.zeros(d)
        split = tree.feature >= 0
        np.add.at(contrib, tree.feature[split],
                  (tree.n_node[split] / tree.n_samples) * tree.gain[split])
        acc += contrib
    acc /= len(forest.trees)
    total = acc.sum()
    if total <= 0.0:
        raise ValidationError("forest has no splits; importance undefined")
    return acc / total


@dataclass
class BinStat:
    lo: float
    hi: float
    mean: float
    ci_lo: float
    ci_hi: float
    count: int
    small: bool                        # n < 5: CI unreliable


def binned_impact(samples: list, indicator: str, n_bins: int = 10) -> list:
    """Mean label per equal-width indicator bin with 0.95 normal CI.
    Samples missing the indicator are skipped; empty bins are omitted."""
    if indicator not in FEATURE_NAMES:
        raise ValidationError(f"unknown indicator {indicator!r}")
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    idx = FEATURE_NAMES.index(indicator)
    pairs = [(s.features.as_array()[idx], s.label) for s in samples]
    pairs = [(x, y) for x, y in pairs if not math.isnan(x)]
    if not pairs:
        raise ValidationError(f"no samples carry {indicator!r}")
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs])
    lo, hi = float(xs.min()), float(xs.max())
    if lo == hi:
        edges = np.array([lo, hi])
        n_bins = 1
    else:
        edges = np.linspace(lo, hi, n_bins + 1)
    out = []
    for b in range(n_bins):
        left, right = edges[b], edges[b + 1]
        mask = (xs >= left) & ((xs < right) | (b == n_bins - 1))
        n = int(mask.sum())
        if n == 0:
            continue
        vals = ys[mask]
        m = float(vals.mean())
        sd = float(vals.std(ddof=1)) if n > 1 else 0.0
        half = 1.96 * sd / math.sqrt(n)
        out.append(BinStat(lo=float(left), hi=float(right), mean=m,
                           ci_lo=m - half, ci_hi=m + half, count=n,
                           small=n < 5))
    return out


def ecdf(values) -> list:
    """[(x, F(x))] with duplicate values collapsed to their last rank."""
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        raise ValidationError("ecdf of empty input")
    vals = np.sort(vals)
    n = vals.size
    out = []
    for i in range(n):
        if i + 1 < n and vals[i + 1] == vals[i]:
            continue
        out.append((float(vals[i]), (i + 1) / n))
    return out
