"""Geospatial connectivity maps over a local metric grid.

Positions project equirectangularly around a configured origin:
x = (lon - origin_lon) * 111320 * cos(origin_lat), y = (lat - origin_lat)
* 110574, cell index = (floor(x/c), floor(y/c)).  Each (operator, KPI)
layer is a sparse dict of cells holding streaming statistics, so maps
build in one pass, merge associatively, and are order-invariant for
count/mean (variance stable to ~1e-9 relative).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .errors import ValidationError

MAP_KPIS = ("rsrp", "rsrq", "sinr", "cqi", "ta", "freq", "ptx", "rtt",
            "datarate_ul", "datarate_dl")

# KPIs where larger means better service; freq has no preferred direction
BETTER = {"rsrp": "max", "rsrq": "max", "sinr": "max", "cqi": "max",
          "datarate_ul": "max", "datarate_dl": "max",
          "rtt": "min", "ptx": "min", "ta": "min"}

MAP_FORMAT = "drivecast-map/1"


def better_direction(kpi: str) -> str:
    if kpi not in BETTER:
        raise ValidationError(f"no better-direction defined for {kpi!r}")
    return BETTER[kpi]


@dataclass(frozen=True)
class GridConfig:
    origin_lat: float
    origin_lon: float
    cell_size: float

    def __post_init__(self):
        if not (math.isfinite(self.origin_lat) and -90.0 <= self.origin_lat <= 90.0):
            raise ValidationError(f"origin_lat {self.origin_lat} outside [-90, 90]")
        if not (math.isfinite(self.origin_lon) and -180.0 <= self.origin_lon <= 180.0):
            raise ValidationError(f"origin_lon {self.origin_lon} outside [-180, 180]")
        if not (math.isfinite(self.cell_size) and self.cell_size > 0):
            raise ValidationError("cell_size must be a positive real")


def project(lat: float, lon: float, config: GridConfig) -> tuple[float, float]:
    """Local metric coordinates (x east, y north) of a WGS84 position."""
    x = (lon - config.origin_lon) * 111320.0 * math.cos(math.radians(config.origin_lat))
    y = (lat - config.origin_lat) * 110574.0
    return x, y


def grid_index(lat: float, lon: float, config: GridConfig) -> tuple[int, int]:
    x, y = project(lat, lon, config)
    return int(math.floor(x / config.cell_size)), int(math.floor(y / config.cell_size))


@dataclass
class CellStats:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        if x < self.min:
            self.min = x
        if x > self.max:
            self.max = x

    def merge(self, other: "CellStats") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            self.min, self.max = other.min, other.max
            return
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta * delta * self.count * other.count / n
        self.count = n
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)

    @property
    def variance(self) -> float | None:
        """Sample variance; undefined below two measurements."""
        if self.count < 2:
            return None
        return self.m2 / (self.count - 1)


@dataclass
class ConnectivityMap:
    config: GridConfig
    layers: dict = field(default_factory=dict)   # (mno, kpi) -> {(i,j): CellStats}
    rejected: int = 0

    def add(self, mno: str, kpi: str, value: float, lat: float, lon: float) -> bool:
        """Folds one measurement in; returns False for non-finite values."""
        if kpi not in MAP_KPIS:
            raise ValidationError(f"unknown map KPI {kpi!r}")
        if value is None or not math.isfinite(value):
            self.rejected += 1
            return False
        cell = grid_index(lat, lon, self.config)
        layer = self.layers.setdefault((mno, kpi), {})
        stats = layer.get(cell)
        if stats is None:
            stats = layer[cell] = CellStats()
        stats.add(float(value))
        return True

    def total_count(self) -> int:
        return sum(s.count for layer in self.layers.values() for s in layer.values())


def build_map(samples, config: GridConfig) -> ConnectivityMap:
    """samples: iterable of (mno, kpi, value, lat, lon)."""
    cmap = ConnectivityMap(config=config)
    for mno, kpi, value, lat, lon in samples:
        cmap.add(mno, kpi, value, lat, lon)
    return cmap


def _ring_cells(ci: int, cj: int, r: int):
    """Cells at Chebyshev distance exactly r, in ascending (i, j) order."""
    if r == 0:
        yield (ci, cj)
        return
    for di in range(-r, r + 1):
        if di == -r or di == r:
            for dj in range(-r, r + 1):
                yield (ci + di, cj + dj)
        else:
            yield (ci + di, cj - r)
            yield (ci + di, cj + r)


def nearest_cell(cells, ci: int, cj: int, fallback_radius: int):
    """Key of the stored cell nearest to (ci, cj) in Chebyshev distance
    within the radius; ties to the smallest (i, j); None if out of reach.
    cells: any mapping keyed by (i, j)."""
    if (ci, cj) in cells:
        return (ci, cj)
    if fallback_radius <= 0:
        return None
    if fallback_radius > 128:       # sparse far search: scan stored keys
        best = None
        for (i, j) in cells:
            d = max(abs(i - ci), abs(j - cj))
            if d <= fallback_radius:
                key = (d, i, j)
                if best is None or key < best:
                    best = key
        return None if best is None else (best[1], best[2])
    for r in range(1, fallback_radius + 1):
        for cell in _ring_cells(ci, cj, r):
            if cell in cells:
                return cell
    return None


def lookup(cmap: ConnectivityMap, lat: float, lon: float, mno: str, kpi: str,
           fallback_radius: int = 0) -> float | None:
    """Cell mean at the query position, else the nearest stored cell's mean
    within the Chebyshev fallback radius (ties to the smallest (i, j)),
    else None."""
    layer = cmap.layers.get((mno, kpi))
    if not layer:
        return None
    ci, cj = grid_index(lat, lon, cmap.config)
    cell = nearest_cell(layer, ci, cj, fallback_radius)
    return None if cell is None else layer[cell].mean


def operator_map(cmap: ConnectivityMap, kpi: str, better: str | None = None) -> dict:
    """(i, j) -> operator with the best cell mean; ties go to the
    lexicographically smallest operator name."""
    if better is None:
        better = better_direction(kpi)
    if better not in ("max", "min"):
        raise ValidationError("better must be 'max' or 'min'")
    cells = {}
    for (mno, k), layer in sorted(cmap.layers.items()):
        if k != kpi:
            continue
        for cell, stats in layer.items():
            cur = cells.get(cell)
            if cur is None:
                cells[cell] = (stats.mean, mno)
                continue
            if better == "max":
                if stats.mean > cur[0]:
                    cells[cell] = (stats.mean, mno)
            else:
                if stats.mean < cur[0]:
                    cells[cell] = (stats.mean, mno)
    return {cell: mno for cell, (_, mno) in cells.items()}


def merge_maps(a: ConnectivityMap, b: ConnectivityMap) -> ConnectivityMap:
    if a.config != b.config:
        raise ValidationError("cannot merge maps with different grid configs")
    out = ConnectivityMap(config=a.config, rejected=a.rejected + b.rejected)
    for src in (a, b):
        for key, layer in src.layers.items():
            dst = out.layers.setdefault(key, {})
            for cell, stats in layer.items():
                tgt = dst.get(cell)
                if tgt is None:
                    tgt = dst[cell] = CellStats()
                tgt.merge(stats)
    return out


def map_to_dict(cmap: ConnectivityMap) -> dict:
    rows = []
    for (mno, kpi), layer in sorted(cmap.layers.items()):
        for (i, j), s in sorted(layer.items()):
            rows.append({"mno": mno, "kpi": kpi, "i": i, "j": j,
                         "count": s.count, "mean": s.mean, "var": s.variance,
                         "min": s.min, "max": s.max})
    return {"format": MAP_FORMAT,
            "config": {"origin_lat": cmap.config.origin_lat,
                       "origin_lon": cmap.config.origin_lon,
                       "cell_size": cmap.config.cell_size},
            "rejected": cmap.rejected,
            "cells": rows}


def map_from_dict(d: dict) -> ConnectivityMap:
    if not isinstance(d, dict) or d.get("format") != MAP_FORMAT:
        raise ValidationError(f"unsupported map payload; expected {MAP_FORMAT}")
    cfg = GridConfig(**d["config"])
    cmap = ConnectivityMap(config=cfg, rejected=int(d.get("rejected", 0)))
    for row in d["cells"]:
        layer = cmap.layers.setdefault((row["mno"], row["kpi"]), {})
        var = row["var"]
        n = int(row["count"])
        layer[(int(row["i"]), int(row["j"]))] = CellStats(
            count=n, mean=float(row["mean"]),
            m2=0.0 if var is None else float(var) * (n - 1),
            min=float(row["min"]), max=float(row["max"]))
    return cmap


def save_map(cmap: ConnectivityMap, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(map_to_dict(cmap), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_map(path: str) -> ConnectivityMap:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read map from {path}: {exc}") from exc
    return map_from_dict(payload)


def layer_csv(cmap: ConnectivityMap, mno: str, kpi: str) -> str:
    """Plot-ready CSV (i, j, mean) for one layer, sorted by cell."""
    layer = cmap.layers.get((mno, kpi), {})
    lines = ["i,j,mean"]
    for (i, j), s in sorted(layer.items()):
        lines.append(f"{i},{j},{s.mean!r}")
    return "\n".join(lines) + "\n"


def map_samples_from_trace(trace, max_gap: float = 5.0):
    """(mno, kpi, value, lat, lon) rows from a trace's LTE contexts and
    joined transmissions, ready for build_map."""
    from .trace import LTE_KPI_FIELDS, interpolate_position, join_samples

    out = []
    kpis = [k for k in ("rsrp", "rsrq", "sinr", "cqi", "ta", "freq", "ptx", "rtt")]
    for ctx in trace.contexts:
        if ctx.tech != "LTE":
            continue
        lat, lon, _ = interpolate_position(trace.fixes, ctx.t)
        for kpi in kpis:
            v = getattr(ctx, kpi)
            if v is not None:
                out.append((ctx.mno, kpi, float(v), lat, lon))
    joined = join_samples(trace, max_gap=max_gap)
    for s in joined.samples:
        kpi = "datarate_ul" if s.direction == "uplink" else "datarate_dl"
        out.append((s.mno, kpi, s.label, s.lat, s.lon))
    return out
