"""Operator comparison: aligned indicator series and selection statistics.

Context measurements are bucketed onto a shared time grid (default 10 s,
the transmission cadence), one value per operator per instant.  A
selection report then answers: what would a vehicle get if it always
used the best operator at each position, and how often is each operator
that best choice?
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .trace import DriveTrace

INDICATORS = ("coverage", "rsrp", "rsrq", "sinr", "cqi", "rtt", "ptx")

# larger is better for signal quality; smaller for latency and TX power
INDICATOR_BETTER = {"rsrp": "max", "rsrq": "max", "sinr": "max", "cqi": "max",
                    "rtt": "min", "ptx": "min", "coverage": "max"}


@dataclass
class IndicatorSeries:
    indicator: str
    instants: np.ndarray                 # bucket start times, shared grid
    values: dict                         # mno -> float array, NaN = missing

    @property
    def mnos(self) -> list[str]:
        return sorted(self.values)

    @property
    def n_instants(self) -> int:
        return len(self.instants)


@dataclass
class SelectionReport:
    indicator: str
    better: str
    mno_mean: dict                       # mno -> mean over its present instants
    best_proportion: dict                # mno -> wins / retained instants
    multi_mean: float | None             # mean of per-instant best values
    n_instants: int                      # retained (>= 1 value present)
    excluded: int                        # all-missing instants dropped
    coverage: dict = field(default_factory=dict)      # mno -> fraction
    combined_coverage: float | None = None


def _trace_by_mno(traces) -> dict:
    if isinstance(traces, DriveTrace):
        return {mno: traces for mno in traces.mnos}
    return dict(traces)


def align_instants(traces, bucket: float = 10.0) -> dict:
    """Buckets per-operator context KPIs onto one time grid.

    traces: a single multi-operator DriveTrace or a mapping mno -> trace
    from the same run.  Returns {indicator: IndicatorSeries} for all of
    INDICATORS; bucket values are means of the in-bucket measurements.
    Disjoint per-operator time ranges warn and yield empty series.
    """
    if bucket <= 0:
        raise ValidationError("bucket must be > 0")
    per_mno = _trace_by_mno(traces)
    if not per_mno:
        raise ValidationError("no traces given")

    ranges = {}
    for mno, tr in per_mno.items():
        ts = [c.t for c in tr.contexts if c.mno == mno]
        if ts:
            ranges[mno] = (min(ts), max(ts))
    if not ranges:
        grid = np.zeros(0)
    else:
        lo_common = max(r[0] for r in ranges.values())
        hi_common = min(r[1] for r in ranges.values())
        if len(ranges) > 1 and lo_common > hi_common:
            warnings.warn("operator time ranges are disjoint; no aligned instants")
            grid = np.zeros(0)
        else:
            lo = min(r[0] for r in ranges.values())
            hi = max(r[1] for r in ranges.values())
            k0 = math.floor(lo / bucket)
            k1 = math.floor(hi / bucket)
            grid = (np.arange(k0, k1 + 1)) * bucket

    out = {}
    mnos = sorted(per_mno)
    for ind in INDICATORS:
        values = {m: np.full(len(grid), np.nan) for m in mnos}
        out[ind] = IndicatorSeries(indicator=ind, instants=grid, values=values)
    if len(grid) == 0:
        return out

    k0 = int(round(grid[0] / bucket))
    sums = {(m, ind): np.zeros(len(grid)) for m in mnos for ind in INDICATORS}
    counts = {(m, ind): np.zeros(len(grid), dtype=int) for m in mnos for ind in INDICATORS}
    lte_seen = {m: np.zeros(len(grid), dtype=bool) for m in mnos}
    any_ctx = {m: np.zeros(len(grid), dtype=bool) for m in mnos}
    for mno, tr in per_mno.items():
        for ctx in tr.contexts:
            if ctx.mno != mno:
                continue
            k = math.floor(ctx.t / bucket) - k0
            if not 0 <= k < len(grid):
                continue
            any_ctx[mno][k] = True
            if ctx.tech == "LTE":
                lte_seen[mno][k] = True
            for ind in ("rsrp", "rsrq", "sinr", "cqi", "rtt", "ptx"):
                v = getattr(ctx, ind)
                if v is not None:
                    sums[(mno, ind)][k] += float(v)
                    counts[(mno, ind)][k] += 1
    for mno in mnos:
        for ind in ("rsrp", "rsrq", "sinr", "cqi", "rtt", "ptx"):
            c = counts[(mno, ind)]
            vals = out[ind].values[mno]
            mask = c > 0
            vals[mask] = sums[(mno, ind)][mask] / c[mask]
        # coverage: 1 when an LTE context exists in the bucket, else 0 at
        # instants the operator was observed at all, else still 0 (a silent
        # radio is an uncovered position, not a missing measurement)
        out["coverage"].values[mno][:] = lte_seen[mno].astype(float)
    return out


def select_best(series: IndicatorSeries, better: str | None = None) -> SelectionReport:
    """Per-instant argbest over operators (ties to the lexicographically
    smallest name); instants with no value at all are excluded and counted."""
    if better is None:
        if series.indicator not in INDICATOR_BETTER:
            raise ValidationError(f"no better-direction for {series.indicator!r}")
        better = INDICATOR_BETTER[series.indicator]
    if better not in ("max", "min"):
        raise ValidationError("better must be 'max' or 'min'")
    mnos = series.mnos
    if not mnos:
        raise ValidationError("series has no operators")
    V = np.vstack([series.values[m] for m in mnos]) if series.n_instants else \
        np.zeros((len(mnos), 0))
    present = ~np.isnan(V)
    retained = present.any(axis=0)
    n_ret = int(retained.sum())
    excluded = series.n_instants - n_ret

    mno_mean = {}
    for r, m in enumerate(mnos):
        vals = V[r, retained & present[r]]
        mno_mean[m] = float(vals.mean()) if vals.size else None

    wins = {m: 0 for m in mnos}
    best_vals = []
    sign = 1.0 if better == "max" else -1.0
    Vr = V[:, retained]
    Pr = present[:, retained]
    for k in range(n_ret):
        best_r = -1
        best_v = -math.inf
        for r in range(len(mnos)):
            if Pr[r, k] and sign * Vr[r, k] > best_v:
                best_v = sign * Vr[r, k]
                best_r = r
        wins[mnos[best_r]] += 1
        best_vals.append(Vr[best_r, k])
    return SelectionReport(
        indicator=series.indicator, better=better, mno_mean=mno_mean,
        best_proportion={m: (wins[m] / n_ret if n_ret else 0.0) for m in mnos},
        multi_mean=float(np.mean(best_vals)) if best_vals else None,
        n_instants=n_ret, excluded=excluded)


def coverage(trace: DriveTrace, mno: str | None = None, technology: str = "LTE",
             bucket: float = 10.0) -> float:
    """Fraction of the trace's alignment instants with a context of the
    given technology; mno=None pools all operators (union)."""
    ts = [c.t for c in trace.contexts if mno is None or c.mno == mno]
    if not ts:
        return 0.0
    k0 = math.floor(min(ts) / bucket)
    k1 = math.floor(max(ts) / bucket)
    seen = np.zeros(k1 - k0 + 1, dtype=bool)
    for c in trace.contexts:
        if (mno is None or c.mno == mno) and c.tech == technology:
            seen[math.floor(c.t / bucket) - k0] = True
    return float(seen.mean())


def coverage_report(traces, bucket: float = 10.0) -> tuple[dict, float]:
    """(per-operator coverage, combined coverage) over the shared grid."""
    series = align_instants(traces, bucket=bucket)["coverage"]
    if series.n_instants == 0:
        return {m: 0.0 for m in series.mnos}, 0.0
    per = {m: float(series.values[m].mean()) for m in series.mnos}
    combined = float(np.maximum.reduce(
        [series.values[m] for m in series.mnos]).mean())
    return per, combined


def table_report(traces, bucket: float = 10.0,
                 indicators: tuple = ("rsrp", "rsrq", "sinr", "cqi", "rtt", "ptx"),
                 ) -> list[SelectionReport]:
    """One SelectionReport per indicator with coverage fields filled in."""
    series = align_instants(traces, bucket=bucket)
    cov, combined = coverage_report(traces, bucket=bucket)
    out = []
    for ind in indicators:
        rep = select_best(series[ind])
        rep.coverage = cov
        rep.combined_coverage = combined
        out.append(rep)
    return out
