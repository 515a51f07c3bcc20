"""Command line front end for the full pipeline.

Subcommands: ingest, synth, validate, build-map, select, train, eval,
matrix, importance, cm-sweep, ecdf, predict.  Outputs are plot-ready CSV
and JSON; rendering is left to external tooling.

Every artifact-producing command writes a manifest next to its outputs
recording the command line, the effective configuration, the seed, SHA-256
digests of all inputs, the package version, and start/finish timestamps.
Re-running with identical inputs and flags yields byte-identical artifacts
except for the manifest timestamps.

Exit codes: 0 success, 2 invalid input or flags (user-fixable),
1 internal error (corrupt model files, unexpected failures).

The output location may also come from the DRIVECAST_OUT environment
variable; an explicit --out always wins.  An optional --config JSON file
supplies flag values by destination name; explicit flags win on conflict.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DriveCastError, ModelIOError, TraceFormatError, ValidationError
from .trace import (FEATURE_NAMES, SCENARIOS, join_samples, load_trace,
                    parse_trace, validate_trace, write_trace)
from .synth import SynthConfig, synth_trace
from .geogrid import (GridConfig, MAP_KPIS, build_map, map_samples_from_trace,
                      save_map)
from .selection import INDICATORS, table_report
from .learn import Dataset, ForestModel, load_model, save_model
from .evaluate import (AGGREGATION_LEVELS, aggregate, cross_validate,
                       make_learner, mdi, ecdf as ecdf_points,
                       train_test_matrix)
from .cmpredict import REPLACEABLE, sweep_cell_sizes


# ---------------------------------------------------------------------------
# small helpers

def _cell(v) -> str:
    """One CSV cell; floats via repr so artifacts are bit-exact."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_inputs(paths) -> dict:
    out = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for child in sorted(p.rglob("*")):
                if child.is_file():
                    out[str(child)] = _sha256(child)
        else:
            out[str(p)] = _sha256(p)
    return out


def _json_safe(v):
    if isinstance(v, (tuple, list)):
        return [_json_safe(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _write_manifest(target: Path, args, inputs, started: str) -> None:
    """target: output directory, or a file the manifest sits beside."""
    cfg = {k: _json_safe(v) for k, v in vars(args).items()
           if k not in ("func", "command", "default_name") and not k.startswith("_")}
    doc = {
        "command": getattr(args, "command", None),
        "argv": sys.argv[1:] if sys.argv[0] else [],
        "config": cfg,
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "version": __version__,
        "started": started,
        "finished": _now(),
    }
    if target.is_dir():
        path = target / "run-manifest.json"
    else:
        path = target.with_name(target.name + ".manifest.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _outdir(args) -> Path:
    out = args.out or os.environ.get("DRIVECAST_OUT")
    if not out:
        raise ValidationError("no output location: pass --out or set DRIVECAST_OUT")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _outfile(args) -> Path:
    out = args.out
    if not out:
        base = os.environ.get("DRIVECAST_OUT")
        if not base:
            raise ValidationError("no output location: pass --out or set DRIVECAST_OUT")
        out = Path(base) / args.default_name
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _load_samples(trace_dir, direction: str, max_gap: float):
    parsed = load_trace(trace_dir)
    joined = join_samples(parsed.trace, max_gap=max_gap)
    samples = joined.samples
    if direction != "both":
        samples = [s for s in samples if s.direction == direction]
    if not samples:
        raise ValidationError(f"no {direction} samples joined from {trace_dir}")
    return samples, parsed.trace


def _key_str(key) -> str:
    if isinstance(key, tuple):
        return "|".join(str(k) for k in key)
    return str(key)


def _learner_params(args) -> dict:
    """Hyper-parameter dict for the chosen learner, from the shared flags."""
    model = args.model
    if model == "linear":
        return {}
    if model == "cart":
        return {"min_leaf": args.min_leaf, "max_depth": args.max_depth}
    if model == "rf":
        return {"n_trees": args.trees, "min_leaf": args.min_leaf,
                "features_per_split": args.mtry, "max_depth": args.max_depth,
                "bootstrap": not args.no_bootstrap}
    if model == "m5":
        return {"min_split": args.min_split, "sdr_stop": args.sdr_stop,
                "smoothing_k": args.smoothing_k}
    raise ValidationError(f"unknown model {model!r}")


def _add_model_flags(p) -> None:
    p.add_argument("--model", choices=("linear", "cart", "rf", "m5"),
                   default="rf", help="learner to fit")
    p.add_argument("--trees", type=int, default=100, help="forest size")
    p.add_argument("--min-leaf", type=int, default=5,
                   help="minimum samples per leaf (cart, rf)")
    p.add_argument("--mtry", type=int, default=None,
                   help="features tried per split (rf; default d/3)")
    p.add_argument("--max-depth", type=int, default=None,
                   help="depth cap (cart, rf)")
    p.add_argument("--no-bootstrap", action="store_true",
                   help="grow rf trees on the full sample")
    p.add_argument("--min-split", type=int, default=4,
                   help="minimum node size to split (m5)")
    p.add_argument("--sdr-stop", type=float, default=0.05,
                   help="growth stops below this fraction of the root sd (m5)")
    p.add_argument("--smoothing-k", type=float, default=15.0,
                   help="leaf/parent smoothing constant, 0 disables (m5)")


def _add_data_flags(p) -> None:
    p.add_argument("--data", required=True, help="trace directory")
    p.add_argument("--direction", choices=("uplink", "downlink", "both"),
                   default="downlink", help="transmissions to model")
    p.add_argument("--max-gap", type=float, default=5.0,
                   help="max context age when joining features to labels (s)")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_ingest(args) -> int:
    started = _now()
    texts = {}
    for name in ("fixes", "contexts", "transmissions"):
        texts[name] = Path(getattr(args, name)).read_text(encoding="utf-8")
    parsed = parse_trace(texts["fixes"], texts["contexts"], texts["transmissions"],
                         scenario=args.scenario, run_id=args.run_id)
    out = _outdir(args)
    write_trace(parsed.trace, out / "trace")
    violations = validate_trace(parsed.trace)
    _write_csv(out / "violations.csv", ("table", "row", "field", "message"),
               [(v.table, v.row, v.field, v.message) for v in violations])
    (out / "warnings.txt").write_text(
        "".join(w + "\n" for w in parsed.warnings), encoding="utf-8", newline="")
    _write_manifest(out, args,
                    _digest_inputs([args.fixes, args.contexts, args.transmissions]),
                    started)
    print(f"ingested {len(parsed.trace.fixes)} fixes, "
          f"{len(parsed.trace.contexts)} contexts, "
          f"{len(parsed.trace.transmissions)} transmissions; "
          f"{len(violations)} violations, {len(parsed.warnings)} warnings")
    return 0


def _cmd_synth(args) -> int:
    started = _now()
    gaps = tuple(args.gap or ())
    cfg = SynthConfig(n_mnos=args.mnos, duration=args.duration, route=args.route,
                      speed_kmh=args.speed, cadence=args.cadence,
                      context_interval=args.context_interval,
                      fix_interval=args.fix_interval,
                      loop_radius=args.loop_radius, site_spacing=args.site_spacing,
                      noise_sd=args.noise_sd, kpi_noise_sd=args.kpi_noise_sd,
                      coverage_gaps=gaps, origin_lat=args.origin_lat,
                      origin_lon=args.origin_lon, seed=args.seed)
    result = synth_trace(cfg)
    out = _outdir(args)
    write_trace(result.trace, out / "trace")
    rows = [(x.t, x.mno, x.direction, true)
            for x, true in zip(result.trace.transmissions, result.true_rates)]
    _write_csv(out / "truth.csv", ("t", "mno", "direction", "datarate_true"), rows)
    _write_manifest(out, args, {}, started)
    print(f"synthesized {len(result.trace.transmissions)} transmissions "
          f"for {len(result.trace.mnos)} operators over {cfg.duration:g} s")
    return 0


def _cmd_validate(args) -> int:
    parsed = load_trace(args.trace)
    violations = validate_trace(parsed.trace)
    for v in violations:
        row = "" if v.row is None else v.row
        print(f"{v.table},{row},{v.field},{v.message}")
    print(f"{len(violations)} violations in {args.trace}")
    return 0


def _cmd_build_map(args) -> int:
    started = _now()
    parsed = load_trace(args.trace)
    samples = list(map_samples_from_trace(parsed.trace, max_gap=args.max_gap))
    if not samples:
        raise ValidationError(f"no mappable samples in {args.trace}")
    olat = args.origin_lat if args.origin_lat is not None else min(s[3] for s in samples)
    olon = args.origin_lon if args.origin_lon is not None else min(s[4] for s in samples)
    config = GridConfig(origin_lat=olat, origin_lon=olon, cell_size=args.cell_size)
    cmap = build_map(samples, config)
    out = _outdir(args)
    save_map(cmap, str(out / "map.json"))
    rows = []
    for (mno, kpi), cells in sorted(cmap.layers.items()):
        for (i, j), st in sorted(cells.items()):
            rows.append((mno, kpi, i, j, st.count, st.mean, st.variance,
                         st.min, st.max))
    _write_csv(out / "layers.csv",
               ("mno", "kpi", "i", "j", "count", "mean", "var", "min", "max"),
               rows)
    _write_manifest(out, args, _digest_inputs([args.trace]), started)
    print(f"map: {cmap.total_count()} samples in {len(rows)} layer cells, "
          f"{cmap.rejected} rejected")
    return 0


def _cmd_select(args) -> int:
    started = _now()
    parsed = load_trace(args.trace)
    indicators = tuple(args.indicators.split(","))
    for ind in indicators:
        if ind not in INDICATORS:
            raise ValidationError(f"unknown indicator {ind!r}; "
                                  f"expected from {INDICATORS}")
    reports = table_report(parsed.trace, bucket=args.bucket,
                           indicators=tuple(i for i in indicators
                                            if i != "coverage"))
    out = _outdir(args)
    rows = []
    for rep in reports:
        for mno in sorted(rep.best_proportion):
            rows.append((rep.indicator, rep.better, mno,
                         rep.mno_mean.get(mno), rep.best_proportion[mno],
                         rep.coverage.get(mno), rep.multi_mean,
                         rep.combined_coverage, rep.n_instants, rep.excluded))
    _write_csv(out / "selection.csv",
               ("indicator", "better", "mno", "mean", "best_proportion",
                "coverage", "multi_mean", "combined_coverage", "n_instants",
                "excluded"),
               rows)
    _write_manifest(out, args, _digest_inputs([args.trace]), started)
    print(f"selection table over {len(reports)} indicators -> {out / 'selection.csv'}")
    return 0


def _cmd_train(args) -> int:
    started = _now()
    samples, _ = _load_samples(args.data, args.direction, args.max_gap)
    data = Dataset.from_samples(samples)
    fit = make_learner(args.model, **_learner_params(args))
    model = fit(data, args.seed)
    out = _outfile(args)
    save_model(model, str(out))
    _write_manifest(out, args, _digest_inputs([args.data]), started)
    print(f"trained {args.model} on {data.n} samples -> {out}")
    return 0


def _cmd_eval(args) -> int:
    started = _now()
    samples, _ = _load_samples(args.data, args.direction, args.max_gap)
    params = _learner_params(args)
    reports, dropped = [], []
    if args.level == "pooled":
        rep = cross_validate(args.model, Dataset.from_samples(samples),
                             k=args.k, seed=args.seed, learner_params=params)
        rep.key = ("pooled",)
        reports.append(rep)
    else:
        agg = aggregate(samples, args.level, k=args.k)
        dropped = agg.dropped
        for key, data in agg.groups:
            rep = cross_validate(args.model, data, k=args.k, seed=args.seed,
                                 learner_params=params)
            rep.key = key
            reports.append(rep)
    out = _outdir(args)
    _write_csv(out / "eval.csv",
               ("key", "learner", "n", "k", "r2", "mae", "r2_fold_mean"),
               [(_key_str(r.key), r.learner, r.n, r.k, r.r2, r.mae,
                 r.r2_fold_mean) for r in reports])
    fold_rows = []
    for r in reports:
        for fold, n_test, r2, fold_mae in r.folds:
            fold_rows.append((_key_str(r.key), fold, n_test, r2, fold_mae))
    _write_csv(out / "folds.csv", ("key", "fold", "n_test", "r2", "mae"),
               fold_rows)
    if dropped:
        _write_csv(out / "dropped.csv", ("key", "n"),
                   [(_key_str(k), n) for k, n in dropped])
    _write_manifest(out, args, _digest_inputs([args.data]), started)
    for r in reports:
        print(f"{_key_str(r.key)}: {args.model} n={r.n} "
              f"r2={r.r2:.4f} mae={r.mae:.4f}")
    return 0


def _cmd_matrix(args) -> int:
    started = _now()
    samples, _ = _load_samples(args.data, args.direction, args.max_gap)
    agg = aggregate(samples, args.level, k=args.k)
    result = train_test_matrix(agg.groups, args.model, k=args.k,
                               seed=args.seed, learner_params=_learner_params(args))
    out = _outdir(args)
    keys = [_key_str(k) for k in result.keys]
    rows = [[keys[i]] + list(result.r2[i]) for i in range(len(keys))]
    _write_csv(out / "matrix.csv", ["train"] + keys, rows)
    _write_manifest(out, args, _digest_inputs([args.data]), started)
    print(f"{len(keys)}x{len(keys)} transfer matrix -> {out / 'matrix.csv'}")
    return 0


def _cmd_importance(args) -> int:
    started = _now()
    inputs = []
    if args.model_file:
        model = load_model(args.model_file)
        if not isinstance(model, ForestModel):
            raise ValidationError("importance needs a forest model")
        inputs.append(args.model_file)
    else:
        if not args.data:
            raise ValidationError("importance needs --model-file or --data")
        samples, _ = _load_samples(args.data, args.direction, args.max_gap)
        data = Dataset.from_samples(samples)
        fit = make_learner("rf", n_trees=args.trees)
        model = fit(data, args.seed)
        inputs.append(args.data)
    scores = mdi(model)
    out = _outdir(args)
    _write_csv(out / "importance.csv", ("feature", "importance"),
               list(zip(model.feature_names, scores)))
    _write_manifest(out, args, _digest_inputs(inputs), started)
    order = np.argsort(scores)[::-1]
    top = ", ".join(f"{model.feature_names[i]}={scores[i]:.3f}"
                    for i in order[:3])
    print(f"importance -> {out / 'importance.csv'} (top: {top})")
    return 0


def _cmd_cm_sweep(args) -> int:
    started = _now()
    samples, _ = _load_samples(args.data, args.direction, args.max_gap)
    sizes = tuple(float(s) for s in args.sizes.split(","))
    kpis = tuple(args.kpis.split(","))
    rows = sweep_cell_sizes(samples, sizes, learner=args.model, k=args.k,
                            seed=args.seed, fallback_radius=args.fallback_radius,
                            kpis=kpis, learner_params=_learner_params(args))
    out = _outdir(args)
    _write_csv(out / "cmsweep.csv",
               ("label", "cell_size", "r2", "mae", "n_scored", "dropped"),
               [(r.label, r.cell_size, r.r2, r.mae, r.n_scored, r.dropped)
                for r in rows])
    _write_manifest(out, args, _digest_inputs([args.data]), started)
    for r in rows:
        print(f"{r.label}: r2={r.r2:.4f} mae={r.mae:.4f} "
              f"scored={r.n_scored} dropped={r.dropped}")
    return 0


def _cmd_ecdf(args) -> int:
    started = _now()
    samples, _ = _load_samples(args.data, args.direction, args.max_gap)
    by_mno: dict[str, list[float]] = {}
    if args.field == "datarate":
        for s in samples:
            by_mno.setdefault(s.mno, []).append(s.label)
    else:
        if args.field not in FEATURE_NAMES:
            raise ValidationError(f"unknown field {args.field!r}; expected "
                                  f"datarate or one of {FEATURE_NAMES}")
        idx = FEATURE_NAMES.index(args.field)
        for s in samples:
            v = s.features.as_array()[idx]
            if np.isfinite(v):
                by_mno.setdefault(s.mno, []).append(float(v))
    rows = []
    for mno in sorted(by_mno):
        for x, p in ecdf_points(by_mno[mno]):
            rows.append((mno, x, p))
    out = _outdir(args)
    _write_csv(out / "ecdf.csv", ("mno", "value", "cum"), rows)
    _write_manifest(out, args, _digest_inputs([args.data]), started)
    print(f"ecdf of {args.field} for {len(by_mno)} operators -> {out / 'ecdf.csv'}")
    return 0


def _cmd_predict(args) -> int:
    started = _now()
    model = load_model(args.model_file)
    text = Path(args.features).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError(f"{args.features} is empty")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != tuple(model.feature_names):
        raise ValidationError(
            f"feature header mismatch: file has {header}, "
            f"model expects {tuple(model.feature_names)}")
    rows = []
    for ln_no, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValidationError(
                f"{args.features}:{ln_no}: expected {len(header)} columns, "
                f"got {len(cells)}")
        try:
            rows.append([float(c) if c.strip() else float("nan") for c in cells])
        except ValueError as exc:
            raise ValidationError(f"{args.features}:{ln_no}: {exc}") from exc
    X = np.array(rows, dtype=np.float64)
    preds = model.predict(X)
    out = _outfile(args)
    _write_csv(out, ("prediction",), [(p,) for p in preds])
    _write_manifest(out, args, _digest_inputs([args.model_file, args.features]),
                    started)
    print(f"{len(preds)} predictions -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivecast",
        description="Drive-test connectivity maps, operator selection, and "
                    "data-rate models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=fn)
        p.add_argument("--config", default=None,
                       help="JSON file of flag values; explicit flags win")
        p.add_argument("--threads", type=int, default=os.cpu_count(),
                       help="worker cap; results are independent of it")
        return p

    p = add("ingest", _cmd_ingest, "normalize raw three-table CSV into a trace")
    p.add_argument("--fixes", required=True, help="GPS fixes CSV")
    p.add_argument("--contexts", required=True, help="radio context CSV")
    p.add_argument("--transmissions", required=True, help="transmission CSV")
    p.add_argument("--scenario", choices=SCENARIOS, default="synthetic")
    p.add_argument("--run-id", default="0")
    p.add_argument("--out", default=None, help="output directory")

    p = add("synth", _cmd_synth, "generate a synthetic multi-operator trace")
    p.add_argument("--mnos", type=int, default=3, help="number of operators")
    p.add_argument("--duration", type=float, default=600.0, help="seconds")
    p.add_argument("--route", choices=("line", "loop"), default="line")
    p.add_argument("--speed", type=float, default=36.0, help="km/h")
    p.add_argument("--cadence", type=float, default=10.0,
                   help="seconds between transmissions per operator")
    p.add_argument("--context-interval", type=float, default=1.0)
    p.add_argument("--fix-interval", type=float, default=1.0)
    p.add_argument("--loop-radius", type=float, default=120.0, help="meters")
    p.add_argument("--site-spacing", type=float, default=500.0, help="meters")
    p.add_argument("--noise-sd", type=float, default=0.05,
                   help="relative sd of the rate label noise")
    p.add_argument("--kpi-noise-sd", type=float, default=0.0,
                   help="sd of extra KPI measurement noise")
    p.add_argument("--gap", action="append", type=_gap_spec, metavar="MNO:T0:T1",
                   help="coverage gap; repeatable")
    p.add_argument("--origin-lat", type=float, default=51.49)
    p.add_argument("--origin-lon", type=float, default=7.41)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")

    p = add("validate", _cmd_validate, "report contract violations in a trace")
    p.add_argument("--trace", required=True, help="trace directory")

    p = add("build-map", _cmd_build_map, "aggregate a trace into a grid map")
    p.add_argument("--trace", required=True, help="trace directory")
    p.add_argument("--cell-size", type=float, default=25.0, help="meters")
    p.add_argument("--origin-lat", type=float, default=None,
                   help="grid origin (default: south-west sample corner)")
    p.add_argument("--origin-lon", type=float, default=None)
    p.add_argument("--max-gap", type=float, default=5.0)
    p.add_argument("--out", default=None, help="output directory")

    p = add("select", _cmd_select, "operator selection statistics table")
    p.add_argument("--trace", required=True, help="trace directory")
    p.add_argument("--bucket", type=float, default=10.0,
                   help="alignment bucket width, seconds")
    p.add_argument("--indicators", default="rsrp,rsrq,sinr,cqi,rtt,ptx",
                   help="comma list")
    p.add_argument("--out", default=None, help="output directory")

    p = add("train", _cmd_train, "fit a data-rate model and save it")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="model JSON path")
    p.set_defaults(default_name="model.json")

    p = add("eval", _cmd_eval, "cross-validated scores, optionally per group")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--level", choices=("pooled",) + AGGREGATION_LEVELS,
                   default="pooled", help="aggregation level")
    p.add_argument("--k", type=int, default=10, help="folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")

    p = add("matrix", _cmd_matrix, "train-on-row, test-on-column R2 matrix")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--level", choices=AGGREGATION_LEVELS, default="mno")
    p.add_argument("--k", type=int, default=10, help="folds for the diagonal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")

    p = add("importance", _cmd_importance, "forest feature importances")
    p.add_argument("--model-file", default=None, help="saved forest JSON")
    p.add_argument("--data", default=None, help="trace directory (fits a forest)")
    p.add_argument("--direction", choices=("uplink", "downlink", "both"),
                   default="downlink")
    p.add_argument("--max-gap", type=float, default=5.0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")

    p = add("cm-sweep", _cmd_cm_sweep, "score map-fed models across cell sizes")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--sizes", default="10,25,50", help="comma list of meters")
    p.add_argument("--fallback-radius", type=int, default=1,
                   help="ring search radius for empty cells")
    p.add_argument("--kpis", default=",".join(REPLACEABLE),
                   help="features replaced by map lookups")
    p.add_argument("--k", type=int, default=10, help="folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")

    p = add("ecdf", _cmd_ecdf, "per-operator empirical CDF of a field")
    _add_data_flags(p)
    p.add_argument("--field", default="datarate",
                   help="datarate or a feature name")
    p.add_argument("--out", default=None, help="output directory")

    p = add("predict", _cmd_predict, "apply a saved model to a feature CSV")
    p.add_argument("--model-file", required=True, help="saved model JSON")
    p.add_argument("--features", required=True,
                   help="CSV with the model's feature header; blank = missing")
    p.add_argument("--out", default=None, help="predictions CSV path")
    p.set_defaults(default_name="predictions.csv")

    return parser


def _gap_spec(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected MNO:T0:T1, got {text!r}")
    try:
        return (parts[0], float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _expand_config(argv: list) -> list:
    """Splice --config file values in as flags, before explicit flags so the
    command line wins.  Unknown keys then fail normal flag parsing."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None or not argv:
        return argv
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    tokens = []
    for key, value in cfg.items():
        flag = "--" + str(key).replace("_", "-")
        if isinstance(value, bool):
            if value:
                tokens.append(flag)
        elif isinstance(value, list):
            for v in value:
                tokens.append(f"{flag}={v}")
        else:
            tokens.append(f"{flag}={value}")
    return argv[:1] + tokens + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValidationError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DriveCastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # internal
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
