"""Prediction from connectivity-map lookups instead of live measurements.

Channel KPIs (rsrp, rsrq, sinr, cqi, ta, freq) are replaced by per-cell
aggregates at the sample's position: means for continuous KPIs, modal
values for the discrete ta and freq.  payload, speed, and cell_id always
come from the sample itself.  The cell-size sweep rebuilds the map from
each fold's training samples only, so no test measurement ever
contributes to the map that featurizes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .evaluate import kfold, mae, r_squared, _resolve_learner
from .geogrid import ConnectivityMap, GridConfig, grid_index, nearest_cell
from .learn.dataset import Dataset
from .trace import FEATURE_NAMES

REPLACEABLE = ("rsrp", "rsrq", "sinr", "cqi", "ta", "freq")
MODAL = ("ta", "freq")


@dataclass(frozen=True)
class CmFeatureSpec:
    cell_size: float                       # meters; typical sweep 5..100
    kpis: tuple = REPLACEABLE
    fallback_radius: int = 1

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValidationError("cell_size must be > 0")
        bad = set(self.kpis) - set(REPLACEABLE)
        if bad:
            raise ValidationError(f"not channel-context features: {sorted(bad)}")
        if self.fallback_radius < 0:
            raise ValidationError("fallback_radius must be >= 0")


@dataclass
class CmMap:
    """Connectivity map plus per-cell mode tables for discrete KPIs."""
    cmap: ConnectivityMap
    modes: dict = field(default_factory=dict)  # (mno,kpi) -> {(i,j): {v: count}}

    @property
    def config(self) -> GridConfig:
        return self.cmap.config


def _mode_value(counter: dict) -> float:
    """Most frequent value; ties to the smallest value."""
    return min(counter, key=lambda v: (-counter[v], v))


def build_cm(samples, spec: CmFeatureSpec,
             origin: tuple[float, float] | None = None) -> CmMap:
    """Map of the samples' own KPI features keyed by sample position.

    origin defaults to the samples' (min lat, min lon); pass one origin
    explicitly when several maps must share a grid.
    """
    if not samples:
        raise ValidationError("no samples to build a map from")
    if origin is None:
        origin = (min(s.lat for s in samples), min(s.lon for s in samples))
    config = GridConfig(origin_lat=origin[0], origin_lon=origin[1],
                        cell_size=spec.cell_size)
    cm = CmMap(cmap=ConnectivityMap(config=config))
    for s in samples:
        for kpi in spec.kpis:
            v = getattr(s.features, kpi)
            if v is None:
                continue
            if kpi in MODAL:
                cell = grid_index(s.lat, s.lon, config)
                layer = cm.modes.setdefault((s.mno, kpi), {})
                counter = layer.setdefault(cell, {})
                counter[float(v)] = counter.get(float(v), 0) + 1
            else:
                cm.cmap.add(s.mno, kpi, float(v), s.lat, s.lon)
    return cm


def _lookup_feature(cm: CmMap, s, kpi: str, radius: int) -> float | None:
    ci, cj = grid_index(s.lat, s.lon, cm.config)
    if kpi in MODAL:
        layer = cm.modes.get((s.mno, kpi))
        if not layer:
            return None
        cell = nearest_cell(layer, ci, cj, radius)
        return None if cell is None else _mode_value(layer[cell])
    layer = cm.cmap.layers.get((s.mno, kpi))
    if not layer:
        return None
    cell = nearest_cell(layer, ci, cj, radius)
    return None if cell is None else layer[cell].mean


@dataclass
class CmFeaturizeResult:
    data: Dataset | None               # None when every sample dropped
    kept: np.ndarray                   # indices into the input samples
    dropped: int


def cm_featurize(samples, cm: CmMap, spec: CmFeatureSpec) -> CmFeaturizeResult:
    """Dataset with the spec's KPIs taken from the map at each sample's
    position; samples with any lookup missing beyond fallback are dropped."""
    if cm.config.cell_size != spec.cell_size:
        raise ValidationError(
            f"map cell_size {cm.config.cell_size} != spec cell_size {spec.cell_size}")
    rows, labels, kept = [], [], []
    for n, s in enumerate(samples):
        fv = s.features.as_array()
        ok = True
        for kpi in spec.kpis:
            v = _lookup_feature(cm, s, kpi, spec.fallback_radius)
            if v is None:
                ok = False
                break
            fv[FEATURE_NAMES.index(kpi)] = v
        if not ok:
            continue
        rows.append(fv)
        labels.append(s.label)
        kept.append(n)
    if not rows:
        return CmFeaturizeResult(data=None, kept=np.zeros(0, dtype=int),
                                 dropped=len(samples))
    return CmFeaturizeResult(
        data=Dataset(X=np.vstack(rows), y=np.asarray(labels)),
        kept=np.asarray(kept, dtype=int), dropped=len(samples) - len(rows))


@dataclass
class SweepRow:
    label: str                         # "MNO" baseline or the cell size
    cell_size: float | None
    r2: float
    mae: float
    n_scored: int
    dropped: int


def sweep_cell_sizes(samples, sizes, learner="rf", k: int = 10, seed: int = 0,
                     fallback_radius: int = 1, kpis: tuple = REPLACEABLE,
                     learner_params: dict | None = None) -> list[SweepRow]:
    """Measured-feature baseline row ("MNO") plus one cross-validated row
    per cell size, all on identical folds.  Per fold and size, the map is
    rebuilt from the training split alone; test rows whose lookups stay
    missing are dropped from scoring and counted."""
    if len(sizes) < 2:
        raise ValidationError("sweep needs at least 2 cell sizes")
    samples = list(samples)
    data = Dataset.from_samples(samples)
    fit, name = _resolve_learner(learner, learner_params)
    folds = kfold(data.n, k=k, seed=seed)
    fold_seeds = [int(s.generate_state(1)[0] >> 1)
                  for s in np.random.SeedSequence(seed).spawn(k)]
    origin = (min(s.lat for s in samples), min(s.lon for s in samples))

    rows = []
    pooled = np.empty(data.n)
    for i, (tr, te) in enumerate(folds):
        model = fit(data.subset(tr), seed=fold_seeds[i])
        pooled[te] = model.predict(data.subset(te))
    rows.append(SweepRow(label="MNO", cell_size=None,
                         r2=r_squared(data.y, pooled), mae=mae(data.y, pooled),
                         n_scored=data.n, dropped=0))

    for c in sizes:
        spec = CmFeatureSpec(cell_size=float(c), kpis=kpis,
                             fallback_radius=fallback_radius)
        preds, acts = [], []
        dropped = 0
        for i, (tr, te) in enumerate(folds):
            train_samples = [samples[j] for j in tr]
            test_samples = [samples[j] for j in te]
            cm = build_cm(train_samples, spec, origin=origin)
            ftr = cm_featurize(train_samples, cm, spec)
            fte = cm_featurize(test_samples, cm, spec)
            dropped += ftr.dropped + fte.dropped
            if ftr.data is None or fte.data is None:
                continue
            model = fit(ftr.data, seed=fold_seeds[i])
            preds.append(model.predict(fte.data))
            acts.append(fte.data.y)
        if not preds:
            raise ValidationError(
                f"cell size {c}: every sample dropped; increase fallback_radius")
        preds = np.concatenate(preds)
        acts = np.concatenate(acts)
        rows.append(SweepRow(label=f"CM{c:g}", cell_size=float(c),
                             r2=r_squared(acts, preds), mae=mae(acts, preds),
                             n_scored=len(acts), dropped=dropped))
    return rows
