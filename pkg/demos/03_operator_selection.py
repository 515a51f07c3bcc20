"""
Which operator should a multi-SIM device pick?
==============================================

Selection statistics compare operators on a shared time grid: context
measurements are bucketed into instants, and per indicator we ask who
was best how often, what the per-operator means were, and what a
best-of-all-operators device would have seen.  Coverage is the share
of instants with a live LTE connection.
"""

import csv
from pathlib import Path

from drivecast.evaluate import ecdf
from drivecast.selection import (align_instants, coverage_report,
                                 select_best, table_report)
from drivecast.synth import SynthConfig, synth_trace
from drivecast.trace import join_samples

OUT = Path(__file__).parent / "out" / "selection-demo"
OUT.mkdir(parents=True, exist_ok=True)

# Operator C spends two minutes outside LTE, so its coverage drops and
# the other operators pick up its share of wins there.
trace = synth_trace(SynthConfig(duration=1200.0,
                                coverage_gaps=(("C", 500.0, 620.0),),
                                seed=5)).trace

series = align_instants(trace, bucket=10.0)
print(f"aligned instants: {series['rsrp'].n_instants}")

# One indicator in detail.  rsrp is larger-is-better; rtt smaller.
for ind in ("rsrp", "rtt"):
    rep = select_best(series[ind])
    wins = ", ".join(f"{m}: {p:.2f}" for m, p in sorted(rep.best_proportion.items()))
    means = ", ".join(f"{m}: {v:.1f}" for m, v in sorted(rep.mno_mean.items()))
    print(f"\n{ind} ({rep.better} better)")
    print(f"  per-operator means: {means}")
    print(f"  best proportions:   {wins}")
    print(f"  multi-operator mean: {rep.multi_mean:.1f}")

# The headline number: a device free to pick the best operator per
# instant always does at least as well as the best single operator.
rep = select_best(series["rsrp"])
assert rep.multi_mean >= max(rep.mno_mean.values())

cov, combined = coverage_report(trace, bucket=10.0)
print(f"\ncoverage: " + ", ".join(f"{m}: {c:.3f}" for m, c in sorted(cov.items())))
print(f"combined coverage (any operator): {combined:.3f}")

# The full report table as one CSV, one row per (indicator, operator).
reports = table_report(trace, bucket=10.0,
                       indicators=("rsrp", "rsrq", "sinr", "cqi", "rtt", "ptx"))
with open(OUT / "selection.csv", "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["indicator", "mno", "mean", "best_proportion", "coverage"])
    for r in reports:
        for m in sorted(r.best_proportion):
            w.writerow([r.indicator, m, r.mno_mean.get(m),
                        r.best_proportion[m], r.coverage.get(m)])

# Per-operator data-rate distributions, ready for a CDF plot.
samples = join_samples(trace).samples
with open(OUT / "ecdf.csv", "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["mno", "rate", "cum"])
    for mno in trace.mnos:
        rates = [s.label for s in samples if s.mno == mno]
        for x, p in ecdf(rates):
            w.writerow([mno, x, p])
print(f"\nartifacts in {OUT}")
