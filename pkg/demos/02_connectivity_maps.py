"""
Connectivity maps: gridded KPI aggregates
=========================================

A connectivity map tiles the survey area with square cells of edge c
meters and stores per-cell KPI statistics for every operator: one map
layer per (operator, KPI).  Maps are mergeable across runs, queryable
with a neighbor fallback, and reducible to "which operator is best
here" rasters.
"""

from pathlib import Path

from drivecast.geogrid import (GridConfig, build_map, layer_csv, load_map,
                               lookup, map_samples_from_trace, merge_maps,
                               operator_map, save_map)
from drivecast.synth import SynthConfig, synth_trace

OUT = Path(__file__).parent / "out" / "map-demo"
OUT.mkdir(parents=True, exist_ok=True)

trace = synth_trace(SynthConfig(duration=900.0, route="loop", seed=7)).trace

# Each mappable sample is one (mno, kpi, value, lat, lon) measurement
# taken from the trace's LTE context records.
samples = list(map_samples_from_trace(trace))
print(f"map samples: {len(samples)}")

config = GridConfig(origin_lat=min(s[3] for s in samples),
                    origin_lon=min(s[4] for s in samples),
                    cell_size=25.0)
cmap = build_map(samples, config)
print(f"layers: {len(cmap.layers)}, total observations: {cmap.total_count()}")

# Cell statistics are exact streaming aggregates: count/mean/min/max
# plus a sample variance once a cell has two observations.
(mno, kpi), layer = sorted(cmap.layers.items())[0]
cell, st = sorted(layer.items())[0]
print(f"\n({mno}, {kpi}) cell {cell}: n={st.count} mean={st.mean:.2f} "
      f"min={st.min:.2f} max={st.max:.2f} var={st.variance:.3f}")

# Querying between measured cells: the lookup walks outward ring by
# ring up to a fallback radius and returns the nearest populated cell.
lat, lon = samples[0][3], samples[0][4]
mean_rsrp = lookup(cmap, lat, lon, mno="A", kpi="rsrp", fallback_radius=2)
print(f"rsrp at first sample position: {mean_rsrp:.2f} dBm")

# Two half-campaigns merged equal one map built from everything; grid
# geometry must match, cell stats pool exactly.
half = len(samples) // 2
merged = merge_maps(build_map(samples[:half], config),
                    build_map(samples[half:], config))
print(f"merge equals single build: {merged.total_count() == cmap.total_count()}")

# Winner raster: per cell, the operator with the best mean.  sinr is a
# larger-is-better KPI; ties go to the lexicographically first name.
winners = operator_map(cmap, "sinr")
share = {m: sum(1 for w in winners.values() if w == m) for m in trace.mnos}
print(f"\nsinr winner cells by operator: {share}")

# Maps persist as versioned JSON; layers export as plot-ready CSV.
save_map(cmap, str(OUT / "map.json"))
again = load_map(str(OUT / "map.json"))
print(f"json round trip layer count: {len(again.layers)}")
(OUT / "layer_A_rsrp.csv").write_text(layer_csv(cmap, "A", "rsrp"))
print(f"artifacts in {OUT}")
