import numpy as np
import pytest

from drivecast.errors import ValidationError
from drivecast.selection import (INDICATORS, IndicatorSeries, align_instants,
                                 coverage, coverage_report, select_best,
                                 table_report)
from drivecast.synth import SynthConfig, synth_trace


def series(values_by_mno, indicator="rsrp"):
    n = len(next(iter(values_by_mno.values())))
    return IndicatorSeries(
        indicator=indicator,
        instants=np.arange(n, dtype=np.float64),
        values={m: np.asarray(v, dtype=np.float64)
                for m, v in values_by_mno.items()})


# --- alignment ---------------------------------------------------------------

def test_alignment_covers_duration(small_trace):
    out = align_instants(small_trace.trace, bucket=10.0)
    s = out["rsrp"]
    assert s.n_instants == 60                       # 600 s / 10 s
    assert sorted(s.values) == ["A", "B", "C"]
    for v in s.values.values():
        assert v.shape == (60,)
        assert not np.isnan(v).any()                # full coverage trace


def test_alignment_marks_silent_buckets(small_trace):
    cfg = SynthConfig(duration=200.0, seed=4, coverage_gaps=(("B", 50.0, 90.0),))
    trace = synth_trace(cfg).trace
    out = align_instants(trace, bucket=10.0)
    rsrp = out["rsrp"]
    gap_cols = (rsrp.instants >= 50.0) & (rsrp.instants < 90.0)
    assert np.isnan(rsrp.values["B"][gap_cols]).all()
    assert not np.isnan(rsrp.values["A"]).any()
    cov = out["coverage"]
    assert (cov.values["B"][gap_cols] == 0.0).all()  # absent = 0, not missing
    assert (cov.values["A"] == 1.0).all()


def test_disjoint_time_ranges_warn_and_yield_nothing():
    a = synth_trace(SynthConfig(duration=100.0, n_mnos=1, seed=1)).trace
    b = synth_trace(SynthConfig(duration=100.0, n_mnos=1, seed=2)).trace
    # shift b's records 1000 s away by rebuilding the timestamps
    from dataclasses import replace
    b = type(b)(scenario=b.scenario, run_id=b.run_id, mnos=("B",),
                fixes=[replace(f, t=f.t + 1000.0) for f in b.fixes],
                contexts=[replace(c, t=c.t + 1000.0, mno="B") for c in b.contexts],
                transmissions=[replace(x, t=x.t + 1000.0, mno="B")
                               for x in b.transmissions])
    with pytest.warns(UserWarning):
        out = align_instants({"A": a, "B": b}, bucket=10.0)
    assert out["rsrp"].n_instants == 0


# --- best-operator statistics --------------------------------------------------

def test_constant_dominance():
    s = series({"A": [-80.0] * 5, "B": [-90.0] * 5})
    rep = select_best(s)
    assert rep.better == "max"
    assert rep.best_proportion == {"A": 1.0, "B": 0.0}
    assert rep.multi_mean == -80.0
    assert rep.mno_mean["A"] == -80.0


def test_min_indicator_inverts_preference():
    s = series({"A": [50.0, 50.0], "B": [80.0, 80.0]}, indicator="rtt")
    rep = select_best(s)
    assert rep.better == "min"
    assert rep.best_proportion == {"A": 1.0, "B": 0.0}
    assert rep.multi_mean == 50.0


def test_tie_goes_to_lexicographically_first():
    s = series({"B": [5.0], "A": [5.0], "C": [4.0]}, indicator="sinr")
    rep = select_best(s)
    assert rep.best_proportion == {"A": 1.0, "B": 0.0, "C": 0.0}


def test_all_missing_instants_excluded():
    s = series({"A": [1.0, np.nan, 3.0], "B": [np.nan, np.nan, 1.0]},
               indicator="sinr")
    rep = select_best(s)
    assert rep.n_instants == 2 and rep.excluded == 1
    assert rep.best_proportion["A"] == 1.0
    assert rep.mno_mean["B"] == 1.0      # mean over B's own present instants


def test_proportions_sum_to_one():
    rng = np.random.default_rng(3)
    s = series({m: rng.normal(size=400) for m in "ABC"})
    rep = select_best(s)
    assert sum(rep.best_proportion.values()) == pytest.approx(1.0, abs=1e-9)


def test_report_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    vals = {m: np.where(rng.uniform(size=500) < 0.1, np.nan,
                        rng.normal(size=500)) for m in "ABC"}
    rep = select_best(series(vals, indicator="sinr"))

    wins = {m: 0 for m in "ABC"}
    best_vals, retained = [], 0
    for i in range(500):
        present = {m: vals[m][i] for m in "ABC" if not np.isnan(vals[m][i])}
        if not present:
            continue
        retained += 1
        best = min(m for m in present if present[m] == max(present.values()))
        wins[best] += 1
        best_vals.append(present[best])
    assert rep.n_instants == retained
    for m in "ABC":
        assert rep.best_proportion[m] == pytest.approx(wins[m] / retained, abs=1e-12)
        own = vals[m][~np.isnan(vals[m])]
        assert rep.mno_mean[m] == pytest.approx(own.mean(), abs=1e-12)
    assert rep.multi_mean == pytest.approx(np.mean(best_vals), abs=1e-12)


def test_multi_mean_dominates_on_complete_series():
    rng = np.random.default_rng(11)
    for trial in range(20):
        s = series({m: rng.normal(size=60) for m in "ABC"}, indicator="rsrp")
        rep = select_best(s)
        assert rep.multi_mean >= max(rep.mno_mean.values()) - 1e-12


def test_unknown_indicator_rejected():
    with pytest.raises(ValidationError):
        select_best(series({"A": [1.0]}, indicator="snr"))
    assert "coverage" in INDICATORS


# --- coverage ----------------------------------------------------------------

def test_full_lte_trace_has_coverage_one(small_trace):
    assert coverage(small_trace.trace, mno="A") == 1.0


def test_planted_gap_coverage_fraction():
    # 500 s trace, 10 s buckets: a 40 s gap silences 4 of 50 buckets
    cfg = SynthConfig(duration=500.0, seed=2, coverage_gaps=(("B", 100.0, 139.0),))
    trace = synth_trace(cfg).trace
    assert coverage(trace, mno="B") == pytest.approx(46 / 50)
    assert coverage(trace, mno="A") == 1.0


def test_combined_coverage_is_union():
    cfg = SynthConfig(duration=500.0, seed=2, coverage_gaps=(("B", 100.0, 139.0),))
    trace = synth_trace(cfg).trace
    per, combined = coverage_report(trace, bucket=10.0)
    assert per["B"] == pytest.approx(0.92)
    assert combined == 1.0                     # A alone already covers all


def test_table_report_fills_every_indicator(small_trace):
    reports = table_report(small_trace.trace, bucket=10.0)
    assert [r.indicator for r in reports] == \
           ["rsrp", "rsrq", "sinr", "cqi", "rtt", "ptx"]
    for rep in reports:
        assert set(rep.coverage) == {"A", "B", "C"}
        assert rep.combined_coverage == 1.0
        assert sum(rep.best_proportion.values()) == pytest.approx(1.0, abs=1e-9)
