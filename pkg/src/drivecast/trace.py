"""Canonical drive-test trace model: GPS track, per-operator radio context,
active transmissions, and the join that turns them into labeled samples.

A trace is stored on disk as three CSV tables plus a small meta.json:

    fixes.csv          t,lat,lon,speed
    contexts.csv       t,mno,tech,rsrp,rsrq,sinr,cqi,ta,freq,enb_id,cell_id,ptx,rtt
    transmissions.csv  t,mno,direction,payload_mb,datarate_mbits

Empty fields mean "missing". Floats use '.' decimals, files are UTF-8 with
LF line endings. Numbers are serialized with repr() so a parse/serialize
round trip is exact.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TraceFormatError, ValidationError

SCENARIOS = ("campus", "urban", "suburban", "highway", "synthetic")
TECH_LTE = "LTE"
TECH_TAGS = ("LTE", "non-LTE", "none")
DIRECTIONS = ("uplink", "downlink")
PAYLOAD_RANGE = (0.1, 10.0)

#: Fixed feature ordering used everywhere a sample becomes a vector.
FEATURE_NAMES = (
    "payload", "rsrp", "rsrq", "sinr", "cqi", "ta", "freq", "speed", "cell_id",
)
#: Index of the single categorical feature (LTE cell identity).
CELL_ID_INDEX = FEATURE_NAMES.index("cell_id")

#: Context fields that only exist while camped on LTE.
LTE_KPI_FIELDS = ("rsrp", "rsrq", "sinr", "cqi", "ta", "freq", "enb_id", "cell_id")


@dataclass(frozen=True)
class GpsFix:
    t: float            # seconds since run start
    lat: float          # degrees WGS84
    lon: float          # degrees WGS84
    speed: float        # km/h


@dataclass(frozen=True)
class ContextSample:
    """One radio-context sample for one operator.

    KPI fields are None while not camped on LTE; ptx and rtt are optional
    even on LTE.
    """

    t: float
    mno: str
    tech: str
    rsrp: float | None = None    # dBm
    rsrq: float | None = None    # dB
    sinr: float | None = None    # dB
    cqi: int | None = None       # 0..15
    ta: int | None = None        # timing advance steps
    freq: float | None = None    # carrier MHz
    enb_id: int | None = None
    cell_id: int | None = None
    ptx: float | None = None     # dBm
    rtt: float | None = None     # ms


@dataclass(frozen=True)
class TransmissionRecord:
    t: float
    mno: str
    direction: str      # uplink | downlink
    payload: float      # MB
    datarate: float     # MBit/s


@dataclass
class DriveTrace:
    """One measurement run: time-sorted fixes, contexts and transmissions."""

    scenario: str
    run_id: str
    mnos: tuple[str, ...]
    fixes: list[GpsFix] = field(default_factory=list)
    contexts: list[ContextSample] = field(default_factory=list)
    transmissions: list[TransmissionRecord] = field(default_factory=list)


@dataclass(frozen=True)
class FeatureVector:
    """The nine predictor values of one transmission, missing values as None.

    Order is fixed: payload, rsrp, rsrq, sinr, cqi, ta, freq, speed, cell_id.
    cell_id is categorical; everything else is numeric.
    """

    payload: float
    rsrp: float | None
    rsrq: float | None
    sinr: float | None
    cqi: int | None
    ta: int | None
    freq: float | None
    speed: float | None
    cell_id: int | None

    def as_array(self) -> np.ndarray:
        """Dense float64 vector in FEATURE_NAMES order, NaN for missing."""
        vals = (self.payload, self.rsrp, self.rsrq, self.sinr, self.cqi,
                self.ta, self.freq, self.speed, self.cell_id)
        return np.array([math.nan if v is None else float(v) for v in vals])


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: float        # measured data rate, MBit/s
    mno: str
    scenario: str
    enb_id: int | None
    cell_id: int | None
    direction: str
    lat: float
    lon: float
    t: float


@dataclass(frozen=True)
class Violation:
    table: str          # fixes | contexts | transmissions | trace
    row: int | None     # 0-based record index, None for whole-trace issues
    field: str
    message: str


@dataclass
class ParsedTrace:
    trace: DriveTrace
    warnings: list[str]


@dataclass
class JoinResult:
    samples: list[LabeledSample]
    dropped: int        # transmissions without an eligible LTE context


# ---------------------------------------------------------------------------
# CSV parsing

_FIX_COLS = ("t", "lat", "lon", "speed")
_CTX_COLS = ("t", "mno", "tech", "rsrp", "rsrq", "sinr", "cqi", "ta", "freq",
             "enb_id", "cell_id", "ptx", "rtt")
_TX_COLS = ("t", "mno", "direction", "payload_mb", "datarate_mbits")


def _float(row, col, table, line, lo=None, hi=None, required=True, positive=False):
    raw = (row.get(col) or "").strip()
    if raw == "":
        if required:
            raise TraceFormatError(f"missing value for '{col}'", table, line)
        return None
    try:
        v = float(raw)
    except ValueError:
        raise TraceFormatError(f"'{col}' is not a number: {raw!r}", table, line) from None
    if not math.isfinite(v):
        raise TraceFormatError(f"'{col}' is not finite: {raw!r}", table, line)
    if positive and v <= 0:
        raise TraceFormatError(f"'{col}' must be > 0, got {v}", table, line)
    if lo is not None and v < lo or hi is not None and v > hi:
        raise TraceFormatError(f"'{col}'={v} outside [{lo}, {hi}]", table, line)
    return v


def _int(row, col, table, line, lo=None, hi=None, required=True):
    raw = (row.get(col) or "").strip()
    if raw == "":
        if required:
            raise TraceFormatError(f"missing value for '{col}'", table, line)
        return None
    try:
        v = int(raw)
    except ValueError:
        raise TraceFormatError(f"'{col}' is not an integer: {raw!r}", table, line) from None
    if lo is not None and v < lo or hi is not None and v > hi:
        raise TraceFormatError(f"'{col}'={v} outside [{lo}, {hi}]", table, line)
    return v


def _reader(text, expected_cols, table, warnings):
    rows = list(csv.DictReader(io.StringIO(text)))
    header = rows[0].keys() if rows else csv.DictReader(io.StringIO(text)).fieldnames
    if header is None:
        header = next(csv.reader(io.StringIO(text)), None)
    if header is None:
        raise TraceFormatError("empty file, expected a header row", table)
    missing = [c for c in expected_cols if c not in header]
    if missing:
        raise TraceFormatError(f"missing required columns {missing}", table)
    unknown = [c for c in header if c not in expected_cols and c is not None]
    if unknown:
        warnings.append(f"{table}: ignoring {len(unknown)} unknown column(s) {unknown}")
    return rows


def parse_trace(fixes_csv: str, contexts_csv: str, transmissions_csv: str,
                scenario: str = "synthetic", run_id: str = "0",
                mnos: tuple[str, ...] | None = None) -> ParsedTrace:
    """Parse the canonical three-table CSV content into a DriveTrace.

    Timestamps must already be sorted (strictly increasing for fixes,
    non-decreasing elsewhere); out-of-order rows raise TraceFormatError
    rather than being silently re-sorted. Unknown columns are ignored and
    counted in the returned warnings. KPI values on non-LTE context rows
    are cleared to missing, with a warning.
    """
    if scenario not in SCENARIOS:
        raise TraceFormatError(f"unknown scenario tag {scenario!r}, expected one of {SCENARIOS}")
    warnings: list[str] = []

    fixes = []
    prev_t = None
    for i, row in enumerate(_reader(fixes_csv, _FIX_COLS, "fixes", warnings)):
        line = i + 2  # header is line 1
        t = _float(row, "t", "fixes", line)
        if prev_t is not None and t <= prev_t:
            raise TraceFormatError(f"non-monotonic timestamp {t} after {prev_t}", "fixes", line)
        prev_t = t
        fixes.append(GpsFix(
            t=t,
            lat=_float(row, "lat", "fixes", line, lo=-90.0, hi=90.0),
            lon=_float(row, "lon", "fixes", line, lo=-180.0, hi=180.0),
            speed=_float(row, "speed", "fixes", line, lo=0.0),
        ))

    contexts = []
    cleared = 0
    prev_t = None
    for i, row in enumerate(_reader(contexts_csv, _CTX_COLS, "contexts", warnings)):
        line = i + 2
        t = _float(row, "t", "contexts", line)
        if prev_t is not None and t < prev_t:
            raise TraceFormatError(f"non-monotonic timestamp {t} after {prev_t}", "contexts", line)
        prev_t = t
        tech = (row.get("tech") or "").strip()
        if tech not in TECH_TAGS:
            raise TraceFormatError(f"unknown tech tag {tech!r}", "contexts", line)
        ctx = ContextSample(
            t=t,
            mno=(row.get("mno") or "").strip(),
            tech=tech,
            rsrp=_float(row, "rsrp", "contexts", line, required=False),
            rsrq=_float(row, "rsrq", "contexts", line, required=False),
            sinr=_float(row, "sinr", "contexts", line, required=False),
            cqi=_int(row, "cqi", "contexts", line, lo=0, hi=15, required=False),
            ta=_int(row, "ta", "contexts", line, lo=0, required=False),
            freq=_float(row, "freq", "contexts", line, required=False),
            enb_id=_int(row, "enb_id", "contexts", line, required=False),
            cell_id=_int(row, "cell_id", "contexts", line, required=False),
            ptx=_float(row, "ptx", "contexts", line, required=False),
            rtt=_float(row, "rtt", "contexts", line, required=False),
        )
        if not ctx.mno:
            raise TraceFormatError("missing value for 'mno'", "contexts", line)
        if tech != TECH_LTE and any(getattr(ctx, f) is not None for f in LTE_KPI_FIELDS):
            ctx = ContextSample(t=ctx.t, mno=ctx.mno, tech=tech, ptx=ctx.ptx, rtt=ctx.rtt)
            cleared += 1
        contexts.append(ctx)
    if cleared:
        warnings.append(f"contexts: cleared LTE KPIs on {cleared} non-LTE row(s)")

    transmissions = []
    prev_t = None
    for i, row in enumerate(_reader(transmissions_csv, _TX_COLS, "transmissions", warnings)):
        line = i + 2
        t = _float(row, "t", "transmissions", line)
        if prev_t is not None and t < prev_t:
            raise TraceFormatError(f"non-monotonic timestamp {t} after {prev_t}",
                                   "transmissions", line)
        prev_t = t
        direction = (row.get("direction") or "").strip()
        if direction not in DIRECTIONS:
            raise TraceFormatError(f"unknown direction {direction!r}", "transmissions", line)
        transmissions.append(TransmissionRecord(
            t=t,
            mno=(row.get("mno") or "").strip(),
            direction=direction,
            payload=_float(row, "payload_mb", "transmissions", line,
                           lo=PAYLOAD_RANGE[0], hi=PAYLOAD_RANGE[1]),
            datarate=_float(row, "datarate_mbits", "transmissions", line, positive=True),
        ))

    if mnos is None:
        mnos = tuple(sorted({c.mno for c in contexts} | {x.mno for x in transmissions}))
    trace = DriveTrace(scenario=scenario, run_id=str(run_id), mnos=tuple(mnos),
                       fixes=fixes, contexts=contexts, transmissions=transmissions)
    referenced = {c.mno for c in contexts} | {x.mno for x in transmissions}
    undeclared = referenced - set(trace.mnos)
    if undeclared:
        raise TraceFormatError(f"rows reference undeclared MNO(s) {sorted(undeclared)}")
    return ParsedTrace(trace=trace, warnings=warnings)


# ---------------------------------------------------------------------------
# CSV serialization

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        raise TypeError("bool is not a trace field value")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_to_csv(trace: DriveTrace) -> dict[str, str]:
    """Serialize a trace to the three canonical CSV texts (LF line endings)."""
    out = {}
    lines = [",".join(_FIX_COLS)]
    for f in trace.fixes:
        lines.append(",".join(_fmt(v) for v in (f.t, f.lat, f.lon, f.speed)))
    out["fixes"] = "\n".join(lines) + "\n"

    lines = [",".join(_CTX_COLS)]
    for c in trace.contexts:
        lines.append(",".join([_fmt(c.t), c.mno, c.tech] +
                              [_fmt(getattr(c, k)) for k in _CTX_COLS[3:]]))
    out["contexts"] = "\n".join(lines) + "\n"

    lines = [",".join(_TX_COLS)]
    for x in trace.transmissions:
        lines.append(",".join([_fmt(x.t), x.mno, x.direction, _fmt(x.payload), _fmt(x.datarate)]))
    out["transmissions"] = "\n".join(lines) + "\n"
    return out


def write_trace(trace: DriveTrace, directory: str | Path) -> None:
    """Write fixes.csv, contexts.csv, transmissions.csv and meta.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for table, text in trace_to_csv(trace).items():
        (directory / f"{table}.csv").write_text(text, encoding="utf-8", newline="")
    meta = {"scenario": trace.scenario, "run_id": trace.run_id, "mnos": list(trace.mnos)}
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n",
                                         encoding="utf-8", newline="")


def load_trace(directory: str | Path) -> ParsedTrace:
    """Load a trace directory written by write_trace (or hand-assembled)."""
    directory = Path(directory)
    meta_path = directory / "meta.json"
    meta = {}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    texts = {}
    for table in ("fixes", "contexts", "transmissions"):
        p = directory / f"{table}.csv"
        if not p.exists():
            raise TraceFormatError(f"missing {p.name} in {directory}", table)
        texts[table] = p.read_text(encoding="utf-8")
    return parse_trace(texts["fixes"], texts["contexts"], texts["transmissions"],
                       scenario=meta.get("scenario", "synthetic"),
                       run_id=str(meta.get("run_id", "0")),
                       mnos=tuple(meta["mnos"]) if "mnos" in meta else None)


# ---------------------------------------------------------------------------
# Validation of in-memory traces

def validate_trace(trace: DriveTrace) -> list[Violation]:
    """Check every documented invariant; returns an empty list iff valid."""
    out: list[Violation] = []
    add = out.append

    if trace.scenario not in SCENARIOS:
        add(Violation("trace", None, "scenario", f"unknown scenario {trace.scenario!r}"))
    declared = set(trace.mnos)

    prev = None
    for i, f in enumerate(trace.fixes):
        if prev is not None and f.t <= prev:
            add(Violation("fixes", i, "t", f"not strictly increasing ({f.t} after {prev})"))
        prev = f.t
        if not -90.0 <= f.lat <= 90.0:
            add(Violation("fixes", i, "lat", f"{f.lat} outside [-90, 90]"))
        if not -180.0 <= f.lon <= 180.0:
            add(Violation("fixes", i, "lon", f"{f.lon} outside [-180, 180]"))
        if f.speed < 0:
            add(Violation("fixes", i, "speed", f"negative speed {f.speed}"))

    prev = None
    for i, c in enumerate(trace.contexts):
        if prev is not None and c.t < prev:
            add(Violation("contexts", i, "t", f"not time-sorted ({c.t} after {prev})"))
        prev = c.t
        if c.mno not in declared:
            add(Violation("contexts", i, "mno", f"undeclared MNO {c.mno!r}"))
        if c.tech not in TECH_TAGS:
            add(Violation("contexts", i, "tech", f"unknown tech {c.tech!r}"))
        if c.tech != TECH_LTE:
            for k in LTE_KPI_FIELDS:
                if getattr(c, k) is not None:
                    add(Violation("contexts", i, k, f"{k} present on tech={c.tech} row"))
        if c.cqi is not None and not 0 <= c.cqi <= 15:
            add(Violation("contexts", i, "cqi", f"cqi={c.cqi} outside [0, 15]"))
        if c.ta is not None and c.ta < 0:
            add(Violation("contexts", i, "ta", f"negative timing advance {c.ta}"))

    prev = None
    for i, x in enumerate(trace.transmissions):
        if prev is not None and x.t < prev:
            add(Violation("transmissions", i, "t", f"not time-sorted ({x.t} after {prev})"))
        prev = x.t
        if x.mno not in declared:
            add(Violation("transmissions", i, "mno", f"undeclared MNO {x.mno!r}"))
        if x.direction not in DIRECTIONS:
            add(Violation("transmissions", i, "direction", f"unknown direction {x.direction!r}"))
        if not PAYLOAD_RANGE[0] <= x.payload <= PAYLOAD_RANGE[1]:
            add(Violation("transmissions", i, "payload",
                          f"payload {x.payload} MB outside {PAYLOAD_RANGE}"))
        if not (math.isfinite(x.datarate) and x.datarate > 0):
            add(Violation("transmissions", i, "datarate", f"datarate {x.datarate} not positive"))
    return out


# ---------------------------------------------------------------------------
# Joining transmissions with context

def interpolate_position(fixes: list[GpsFix], t: float) -> tuple[float, float, float]:
    """(lat, lon, speed) at time t, linear between the two bracketing fixes.

    Times outside the fix range clamp to the first/last fix.
    """
    if not fixes:
        raise ValidationError("trace has no GPS fixes, cannot locate samples")
    times = [f.t for f in fixes]
    k = bisect.bisect_right(times, t)
    if k == 0:
        f = fixes[0]
        return f.lat, f.lon, f.speed
    if k == len(fixes):
        f = fixes[-1]
        return f.lat, f.lon, f.speed
    a, b = fixes[k - 1], fixes[k]
    w = (t - a.t) / (b.t - a.t)
    return (a.lat + w * (b.lat - a.lat),
            a.lon + w * (b.lon - a.lon),
            a.speed + w * (b.speed - a.speed))


def join_samples(trace: DriveTrace, max_gap: float = 5.0) -> JoinResult:
    """Attach each transmission to its nearest-in-time LTE context of the
    same operator, producing one LabeledSample per matched transmission.

    A transmission with no same-MNO LTE context within max_gap seconds is
    dropped and counted (mirrors the LTE-only gating of the measurements).
    Nearest-in-time ties go to the earlier context. Sample position and
    speed come from interpolate_position at the transmission time.
    """
    by_mno: dict[str, list[ContextSample]] = {}
    for c in trace.contexts:
        if c.tech == TECH_LTE:
            by_mno.setdefault(c.mno, []).append(c)
    times = {mno: [c.t for c in lst] for mno, lst in by_mno.items()}

    samples: list[LabeledSample] = []
    dropped = 0
    for x in trace.transmissions:
        lst = by_mno.get(x.mno)
        if not lst:
            dropped += 1
            continue
        ts = times[x.mno]
        k = bisect.bisect_left(ts, x.t)
        best = None
        for j in (k - 1, k):
            if 0 <= j < len(lst):
                dt = abs(ts[j] - x.t)
                if best is None or dt < best[0]:
                    best = (dt, j)
        if best is None or best[0] > max_gap:
            dropped += 1
            continue
        ctx = lst[best[1]]
        lat, lon, speed = interpolate_position(trace.fixes, x.t)
        fv = FeatureVector(payload=x.payload, rsrp=ctx.rsrp, rsrq=ctx.rsrq,
                           sinr=ctx.sinr, cqi=ctx.cqi, ta=ctx.ta, freq=ctx.freq,
                           speed=speed, cell_id=ctx.cell_id)
        samples.append(LabeledSample(
            features=fv, label=x.datarate, mno=x.mno, scenario=trace.scenario,
            enb_id=ctx.enb_id, cell_id=ctx.cell_id, direction=x.direction,
            lat=lat, lon=lon, t=x.t))
    return JoinResult(samples=samples, dropped=dropped)
