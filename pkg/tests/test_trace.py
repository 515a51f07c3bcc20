import math

import numpy as np
import pytest

from drivecast.errors import TraceFormatError, ValidationError
from drivecast.trace import (ContextSample, DriveTrace, GpsFix,
                             TransmissionRecord, interpolate_position,
                             join_samples, load_trace, parse_trace,
                             trace_to_csv, validate_trace, write_trace)

FIX_HDR = "t,lat,lon,speed\n"
CTX_HDR = "t,mno,tech,rsrp,rsrq,sinr,cqi,ta,freq,enb_id,cell_id,ptx,rtt\n"
TX_HDR = "t,mno,direction,payload_mb,datarate_mbits\n"


def minimal_texts():
    fixes = FIX_HDR + "0,51.5,7.4,10\n"
    ctx = CTX_HDR + "0,A,LTE,-80,-10,15,9,3,1800,101,1011,,\n"
    tx = TX_HDR + "0,A,uplink,1.0,20.5\n"
    return fixes, ctx, tx


def test_minimal_trace_parses():
    parsed = parse_trace(*minimal_texts())
    t = parsed.trace
    assert (len(t.fixes), len(t.contexts), len(t.transmissions)) == (1, 1, 1)
    assert t.mnos == ("A",)
    assert t.contexts[0].rsrp == -80.0
    assert t.transmissions[0].datarate == 20.5


def test_lat_out_of_bounds_names_the_row():
    fixes = FIX_HDR + "0,51.5,7.4,10\n1,95,7.4,10\n"
    _, ctx, tx = minimal_texts()
    with pytest.raises(TraceFormatError) as err:
        parse_trace(fixes, ctx, tx)
    assert "lat" in str(err.value) and "3" in str(err.value)  # header is line 1


def test_shuffled_fix_timestamps_rejected():
    fixes = FIX_HDR + "5,51.5,7.4,10\n2,51.5,7.4,10\n"
    _, ctx, tx = minimal_texts()
    with pytest.raises(TraceFormatError, match="monotonic"):
        parse_trace(fixes, ctx, tx)


def test_unknown_column_warned_not_fatal():
    fixes = "t,lat,lon,speed,extra\n0,51.5,7.4,10,x\n"
    _, ctx, tx = minimal_texts()
    parsed = parse_trace(fixes, ctx, tx)
    assert any("extra" in w for w in parsed.warnings)


def test_non_lte_kpis_cleared_with_warning():
    fixes, _, tx = minimal_texts()
    ctx = CTX_HDR + "0,A,non-LTE,-80,-10,15,9,3,1800,101,1011,,\n"
    parsed = parse_trace(fixes, ctx, tx)
    c = parsed.trace.contexts[0]
    assert c.rsrp is None and c.cqi is None and c.cell_id is None
    assert any("non-LTE" in w for w in parsed.warnings)


def test_csv_round_trip_is_identity(small_trace):
    texts = trace_to_csv(small_trace.trace)
    again = parse_trace(texts["fixes"], texts["contexts"], texts["transmissions"],
                        scenario=small_trace.trace.scenario,
                        run_id=small_trace.trace.run_id,
                        mnos=small_trace.trace.mnos)
    assert trace_to_csv(again.trace) == texts


def test_write_load_round_trip(tmp_path, small_trace):
    write_trace(small_trace.trace, tmp_path / "t")
    parsed = load_trace(tmp_path / "t")
    assert parsed.trace == small_trace.trace


def test_load_missing_table_errors(tmp_path, small_trace):
    write_trace(small_trace.trace, tmp_path / "t")
    (tmp_path / "t" / "contexts.csv").unlink()
    with pytest.raises(TraceFormatError, match="contexts"):
        load_trace(tmp_path / "t")


# --- validation ------------------------------------------------------------

def make_trace(contexts=None, transmissions=None, fixes=None, mnos=("A",)):
    return DriveTrace(
        scenario="synthetic", run_id="0", mnos=mnos,
        fixes=fixes or [GpsFix(t=0.0, lat=51.5, lon=7.4, speed=10.0)],
        contexts=contexts or [],
        transmissions=transmissions or [])


def test_valid_synthetic_trace_has_no_violations(small_trace):
    assert validate_trace(small_trace.trace) == []


def test_cqi_out_of_range_flagged():
    ctx = ContextSample(t=0.0, mno="A", tech="LTE", cqi=20)
    violations = validate_trace(make_trace(contexts=[ctx]))
    assert len(violations) == 1
    v = violations[0]
    assert v.field == "cqi" and "20" in v.message and v.row == 0


def test_two_planted_violations_both_reported():
    ctx = ContextSample(t=0.0, mno="A", tech="LTE", cqi=20)
    tx = TransmissionRecord(t=0.0, mno="B", direction="uplink",
                            payload=1.0, datarate=5.0)
    violations = validate_trace(make_trace(contexts=[ctx], transmissions=[tx]))
    assert len(violations) == 2
    assert {v.field for v in violations} == {"cqi", "mno"}


# --- interpolation ---------------------------------------------------------

def test_interpolation_linear_between_fixes():
    fixes = [GpsFix(t=0.0, lat=50.0, lon=7.0, speed=0.0),
             GpsFix(t=10.0, lat=51.0, lon=8.0, speed=20.0)]
    lat, lon, speed = interpolate_position(fixes, 2.5)
    assert (lat, lon, speed) == (50.25, 7.25, 5.0)


def test_interpolation_clamps_outside_range():
    fixes = [GpsFix(t=0.0, lat=50.0, lon=7.0, speed=0.0),
             GpsFix(t=10.0, lat=51.0, lon=8.0, speed=20.0)]
    assert interpolate_position(fixes, -5.0) == (50.0, 7.0, 0.0)
    assert interpolate_position(fixes, 15.0) == (51.0, 8.0, 20.0)


def test_interpolation_without_fixes_errors():
    with pytest.raises(ValidationError, match="fixes"):
        interpolate_position([], 0.0)


# --- joining ---------------------------------------------------------------

def ctx_at(t, mno="A", tech="LTE", **kw):
    defaults = dict(rsrp=-80.0, rsrq=-10.0, sinr=15.0, cqi=9, ta=3,
                    freq=1800.0, enb_id=101, cell_id=1011)
    defaults.update(kw)
    return ContextSample(t=t, mno=mno, tech=tech,
                         **(defaults if tech == "LTE" else {}))


def tx_at(t, mno="A"):
    return TransmissionRecord(t=t, mno=mno, direction="uplink",
                              payload=1.0, datarate=10.0)


def test_join_picks_nearest_context():
    trace = make_trace(contexts=[ctx_at(9.0, sinr=1.0), ctx_at(12.0, sinr=2.0)],
                       transmissions=[tx_at(10.0)])
    result = join_samples(trace)
    assert result.dropped == 0
    assert result.samples[0].features.sinr == 1.0  # t=9 is closer than t=12


def test_join_tie_goes_to_earlier_context():
    trace = make_trace(contexts=[ctx_at(8.0, sinr=1.0), ctx_at(12.0, sinr=2.0)],
                       transmissions=[tx_at(10.0)])
    assert join_samples(trace).samples[0].features.sinr == 1.0


def test_join_drops_when_only_non_lte_within_gap():
    trace = make_trace(contexts=[ctx_at(10.0, tech="non-LTE")],
                       transmissions=[tx_at(10.0)])
    result = join_samples(trace)
    assert result.samples == [] and result.dropped == 1


def test_join_respects_max_gap():
    trace = make_trace(contexts=[ctx_at(0.0)], transmissions=[tx_at(10.0)])
    assert join_samples(trace, max_gap=5.0).dropped == 1
    assert join_samples(trace, max_gap=10.0).dropped == 0


def test_join_matches_brute_force_pairing(small_trace):
    trace = small_trace.trace
    result = join_samples(trace, max_gap=5.0)
    lte = [c for c in trace.contexts if c.tech == "LTE"]
    expected = 0
    by_tx = {}
    for x in trace.transmissions:
        cands = [(abs(c.t - x.t), c.t, c) for c in lte if c.mno == x.mno]
        cands = [c for c in cands if c[0] <= 5.0]
        if cands:
            expected += 1
            best = min(cands, key=lambda c: (c[0], c[1]))
            by_tx[(x.t, x.mno)] = best[2]
    assert len(result.samples) == expected
    for s in result.samples:
        assert s.features.rsrp == by_tx[(s.t, s.mno)].rsrp


def test_join_interpolates_position(small_trace):
    trace = small_trace.trace
    sample = join_samples(trace).samples[0]
    lat, lon, speed = interpolate_position(trace.fixes, sample.t)
    assert (sample.lat, sample.lon) == (lat, lon)
    assert sample.features.speed == speed
