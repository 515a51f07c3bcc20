"""Synthetic drive traces and benchmark datasets with known ground truth.

The trace generator drives a configurable route past per-operator eNB
sites, evaluates spatially smooth KPI fields (log-distance path loss plus
sinusoidal shadowing, interference-based SINR), and emits the canonical
three-table trace.  Every transmission's exact noiseless data rate is
recorded so tests own the ground truth.

The data-rate map is deterministic and piecewise in the nine features:

    pf   = payload / (payload + 0.8)                    (transfer ramp-up)
    base = 2.2 + 0.62*sinr + 0.045*(rsrp+100)           if sinr < 6
           6.0 + 0.50*sinr + 0.25*(rsrp+94)             elif rsrp < -94
           7.5 + 0.55*sinr + 0.30*cqi + 0.08*(rsrq+12)  otherwise
    base += 1.2 if freq >= 2500 else 0
    base -= 0.03 * max(speed - 80, 0)
    rate  = scale * pf * max(base, 0.3)    (scale: 3.5 uplink, 6.3 downlink)

ta and cell_id carry no signal.  The mirrored rule variant evaluates the
same map on reflected features (sinr -> 23-sinr, rsrp -> -175-rsrp, and
so on), producing an identically distributed label with a disjoint
feature-to-label relationship.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .trace import (ContextSample, DriveTrace, GpsFix, TransmissionRecord,
                    interpolate_position)

M_PER_DEG_LAT = 110574.0
M_PER_DEG_LON = 111320.0
CARRIERS_MHZ = (800.0, 1800.0, 2600.0)
TA_METERS = 78.12


@dataclass(frozen=True)
class SynthConfig:
    n_mnos: int = 3
    duration: float = 600.0          # s
    route: str = "line"              # line | loop
    speed_kmh: float = 36.0          # mean speed; smooth +-15% variation
    cadence: float = 10.0            # s between transmissions per MNO
    context_interval: float = 1.0    # s between context samples per MNO
    fix_interval: float = 1.0        # s between GPS fixes
    loop_radius: float = 120.0       # m, loop route only
    site_spacing: float = 500.0      # m between sites along the route
    noise_sd: float = 0.05           # multiplicative label noise fraction
    kpi_noise_sd: float = 0.0        # additive dB noise on rsrp/rsrq/sinr
    coverage_gaps: tuple = ()        # (mno, t0, t1): non-LTE intervals
    origin_lat: float = 51.49
    origin_lon: float = 7.41
    seed: int = 0


@dataclass
class SynthResult:
    trace: DriveTrace
    true_rates: list[float]          # noiseless rate per transmission, in order


def data_rate(payload: float, rsrp: float, rsrq: float, sinr: float,
              cqi: float, ta: float, freq: float, speed: float,
              cell_id: float, direction: str = "uplink") -> float:
    """The documented deterministic rate map (MBit/s); see module docstring."""
    x = np.array([[payload, rsrp, rsrq, sinr, cqi, ta, freq, speed, cell_id]])
    scale = 3.5 if direction == "uplink" else 6.3
    return float(_rate_map(x, scale=scale)[0])


def _rate_map(X: np.ndarray, scale: float = 3.5) -> np.ndarray:
    payload, rsrp, rsrq, sinr = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    cqi, freq, speed = X[:, 4], X[:, 6], X[:, 7]
    pf = payload / (payload + 0.8)
    base = np.where(
        sinr < 6.0,
        2.2 + 0.62 * sinr + 0.045 * (rsrp + 100.0),
        np.where(rsrp < -94.0,
                 6.0 + 0.50 * sinr + 0.25 * (rsrp + 94.0),
                 7.5 + 0.55 * sinr + 0.30 * cqi + 0.08 * (rsrq + 12.0)))
    base = base + np.where(freq >= 2500.0, 1.2, 0.0)
    base = base - 0.03 * np.maximum(speed - 80.0, 0.0)
    return scale * pf * np.maximum(base, 0.3)


def _mirror(X: np.ndarray) -> np.ndarray:
    """Feature reflection that preserves the sampling distribution."""
    M = X.copy()
    M[:, 0] = 1.0 / X[:, 0]              # log-uniform payload on (0.1, 10)
    M[:, 1] = -175.0 - X[:, 1]           # rsrp about -87.5
    M[:, 2] = -22.0 - X[:, 2]            # rsrq about -11
    M[:, 3] = 23.0 - X[:, 3]             # sinr about 11.5
    M[:, 4] = 15.0 - X[:, 4]             # cqi
    M[:, 5] = 30.0 - X[:, 5]             # ta
    M[:, 6] = 3400.0 - X[:, 6]           # 800 <-> 2600, 1800 fixed
    M[:, 7] = 130.0 - X[:, 7]            # speed
    return M


def make_piecewise_dataset(n_rows: int = 5000, seed: int = 0,
                           noise_sd: float = 0.05, n_cells: int = 20,
                           rule: str = "standard"):
    """Benchmark table of 9 iid features with piecewise labels.

    Returns (Dataset, true_rates).  cqi is sampled independently of sinr
    here (unlike real traces) so importance concentrates on sinr.  labels
    are true * (1 + noise_sd * z); noise_sd=0 gives labels == truth.
    """
    from .learn.dataset import Dataset

    if n_rows < 1:
        raise ValidationError("n_rows must be >= 1")
    if rule not in ("standard", "mirrored"):
        raise ValidationError(f"unknown rule {rule!r}")
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        np.exp(rng.uniform(math.log(0.1), math.log(10.0), n_rows)),
        rng.uniform(-115.0, -60.0, n_rows),
        rng.uniform(-18.0, -4.0, n_rows),
        rng.uniform(-5.0, 28.0, n_rows),
        rng.integers(0, 16, n_rows).astype(np.float64),
        rng.integers(0, 31, n_rows).astype(np.float64),
        rng.choice(np.asarray(CARRIERS_MHZ), n_rows),
        rng.uniform(0.0, 130.0, n_rows),
        (100 + rng.integers(0, n_cells, n_rows)).astype(np.float64),
    ])
    truth = _rate_map(_mirror(X) if rule == "mirrored" else X)
    y = truth * (1.0 + noise_sd * rng.standard_normal(n_rows))
    return Dataset(X=X, y=y), truth


def _mno_names(n: int) -> list[str]:
    if n > 26:
        raise ValidationError("n_mnos must be <= 26")
    return [chr(ord("A") + i) for i in range(n)]


@dataclass
class _Sites:
    x: np.ndarray
    y: np.ndarray
    enb_id: np.ndarray
    cell_id: np.ndarray
    freq: np.ndarray
    power_offset: float


def _build_sites(cfg: SynthConfig, mno_idx: int, s_max: float) -> _Sites:
    """Per-operator sites along the route, staggered so cell borders differ."""
    offsets = (0.0, -7.0, -3.0, -5.0, -1.5)
    phase = cfg.site_spacing * mno_idx / max(cfg.n_mnos, 1)
    if cfg.route == "loop":
        circumference = 2.0 * math.pi * cfg.loop_radius
        n_sites = max(2, int(math.ceil(circumference / cfg.site_spacing)))
        ang = 2.0 * math.pi * (np.arange(n_sites) + mno_idx / cfg.n_mnos) / n_sites
        radial = cfg.loop_radius + np.where(np.arange(n_sites) % 2 == 0, 150.0, -90.0)
        x = radial * np.cos(ang)
        y = radial * np.sin(ang) + cfg.loop_radius
    else:
        n_sites = max(2, int(math.ceil(s_max / cfg.site_spacing)) + 1)
        x = phase + cfg.site_spacing * np.arange(n_sites)
        y = np.where(np.arange(n_sites) % 2 == 0, 150.0, -150.0) + 15.0 * mno_idx
    enb = 100 * (mno_idx + 1) + np.arange(n_sites)
    return _Sites(x=x, y=y, enb_id=enb, cell_id=enb * 10 + np.arange(n_sites) % 3,
                  freq=np.asarray(CARRIERS_MHZ)[np.arange(n_sites) % 3],
                  power_offset=offsets[mno_idx % len(offsets)])


def _route_position(cfg: SynthConfig, t: np.ndarray):
    """Analytic (x, y) meters and speed km/h at times t."""
    a = cfg.speed_kmh / 3.6
    b = 0.15 * a
    omega = 2.0 * math.pi / 180.0
    phi = 0.7
    v = a + b * np.sin(omega * t + phi)
    s = a * t - (b / omega) * (np.cos(omega * t + phi) - math.cos(phi))
    if cfg.route == "loop":
        theta = s / cfg.loop_radius
        x = cfg.loop_radius * np.cos(theta)
        y = cfg.loop_radius * np.sin(theta) + cfg.loop_radius
    else:
        x = s
        y = 40.0 * np.sin(2.0 * math.pi * s / 700.0)
    return x, y, v * 3.6, s


def _xy_to_latlon(cfg: SynthConfig, x, y):
    lat = cfg.origin_lat + np.asarray(y) / M_PER_DEG_LAT
    lon = cfg.origin_lon + np.asarray(x) / (
        M_PER_DEG_LON * math.cos(math.radians(cfg.origin_lat)))
    return lat, lon


def _kpis_at(sites: _Sites, x: float, y: float, noise3) -> dict:
    """Smooth KPI field at one position: serving cell, rsrp, sinr chain."""
    d = np.hypot(sites.x - x, sites.y - y)
    shadow = 2.5 * np.sin(x / 91.0 + 2.3 * np.arange(len(d))) * \
        np.cos(y / 57.0 - 1.1 * np.arange(len(d)))
    rsrp_all = -13.0 - 30.0 * np.log10(np.maximum(d, 30.0)) + shadow + sites.power_offset
    s = int(np.argmax(rsrp_all))
    rsrp = rsrp_all[s] + noise3[0]
    lin = 10.0 ** (rsrp_all / 10.0)
    interference = lin.sum() - lin[s] + 10.0 ** (-115.0 / 10.0)
    sinr = 10.0 * math.log10(lin[s] / interference) + noise3[2]
    sinr = min(max(sinr, -7.0), 30.0)
    rsrq = min(max(-19.5 + 0.44 * (sinr + 7.0) + noise3[1], -19.5), -3.0)
    cqi = int(min(max(round(0.48 * sinr + 4.2), 0), 15))
    return {
        "rsrp": round(rsrp, 2),
        "rsrq": round(rsrq, 2),
        "sinr": round(sinr, 2),
        "cqi": cqi,
        "ta": int(d[s] / TA_METERS),
        "freq": float(sites.freq[s]),
        "enb_id": int(sites.enb_id[s]),
        "cell_id": int(sites.cell_id[s]),
        "ptx": round(min(max(23.0 - 0.6 * (rsrp + 110.0), -8.0), 23.0), 2),
        "rtt": round(30.0 + 2.2 * max(0.0, 12.0 - sinr) + 0.01 * d[s], 2),
    }


def _in_gap(gaps, mno: str, t: float) -> bool:
    return any(g[0] == mno and g[1] <= t <= g[2] for g in gaps)


def synth_trace(cfg: SynthConfig) -> SynthResult:
    """Deterministic synthetic trace; same cfg gives byte-identical tables."""
    if cfg.duration <= 0:
        raise ValidationError("duration must be > 0")
    if cfg.n_mnos < 1:
        raise ValidationError("n_mnos must be >= 1")
    if cfg.route not in ("line", "loop"):
        raise ValidationError(f"unknown route {cfg.route!r}")
    if min(cfg.cadence, cfg.context_interval, cfg.fix_interval) <= 0:
        raise ValidationError("intervals must be > 0")
    if cfg.noise_sd < 0 or cfg.kpi_noise_sd < 0:
        raise ValidationError("noise levels must be >= 0")
    rng = np.random.default_rng(cfg.seed)
    mnos = _mno_names(cfg.n_mnos)

    fix_t = np.arange(0.0, cfg.duration, cfg.fix_interval)
    fx, fy, fspeed, _ = _route_position(cfg, fix_t)
    flat, flon = _xy_to_latlon(cfg, fx, fy)
    fixes = [GpsFix(t=float(t), lat=round(float(la), 7), lon=round(float(lo), 7),
                    speed=round(float(sp), 2))
             for t, la, lo, sp in zip(fix_t, flat, flon, fspeed)]

    _, _, _, s_end = _route_position(cfg, np.array([cfg.duration]))
    sites = [_build_sites(cfg, i, float(s_end[0])) for i in range(cfg.n_mnos)]

    ctx_t = np.arange(0.0, cfg.duration, cfg.context_interval)
    cx, cy, _, _ = _route_position(cfg, ctx_t)
    contexts = []
    kpi_at = {}                      # (mno_idx, context index) -> kpi dict
    for k, t in enumerate(ctx_t):
        for i, mno in enumerate(mnos):
            if _in_gap(cfg.coverage_gaps, mno, float(t)):
                contexts.append(ContextSample(t=float(t), mno=mno, tech="non-LTE"))
                continue
            noise3 = cfg.kpi_noise_sd * rng.standard_normal(3) \
                if cfg.kpi_noise_sd > 0 else np.zeros(3)
            kpi = _kpis_at(sites[i], float(cx[k]), float(cy[k]), noise3)
            kpi_at[(i, k)] = kpi
            contexts.append(ContextSample(t=float(t), mno=mno, tech="LTE", **kpi))

    tx_t = np.arange(0.0, cfg.duration, cfg.cadence)
    transmissions = []
    true_rates = []
    trace = DriveTrace(scenario="synthetic", run_id=f"seed{cfg.seed}",
                       mnos=tuple(mnos), fixes=fixes, contexts=contexts,
                       transmissions=[])
    for k, t in enumerate(tx_t):
        # transmissions aligned with a context row reuse its exact KPIs, so
        # zero-noise labels are exact functions of the joined features
        j = int(round(float(t) / cfg.context_interval))
        aligned = (0 <= j < len(ctx_t)
                   and abs(j * cfg.context_interval - float(t)) <= 1e-9)
        for i, mno in enumerate(mnos):
            payload = round(float(np.exp(rng.uniform(math.log(0.1), math.log(10.0)))), 3)
            z = float(rng.standard_normal())
            if _in_gap(cfg.coverage_gaps, mno, float(t)):
                continue
            if aligned:
                kpi = kpi_at[(i, j)]
            else:
                px, py, _, _ = _route_position(cfg, np.array([float(t)]))
                kpi = _kpis_at(sites[i], float(px[0]), float(py[0]), np.zeros(3))
            _, _, speed = interpolate_position(fixes, float(t))
            direction = "uplink" if (k + i) % 2 == 0 else "downlink"
            truth = data_rate(payload, kpi["rsrp"], kpi["rsrq"], kpi["sinr"],
                              kpi["cqi"], kpi["ta"], kpi["freq"], speed,
                              kpi["cell_id"], direction)
            rate = truth * (1.0 + cfg.noise_sd * z) if cfg.noise_sd > 0 else truth
            transmissions.append(TransmissionRecord(
                t=float(t), mno=mno, direction=direction, payload=payload,
                datarate=rate))
            true_rates.append(truth)
    trace.transmissions = transmissions
    return SynthResult(trace=trace, true_rates=true_rates)
