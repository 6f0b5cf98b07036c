"""Command-line entry point: ``rppgbench {run,regress,buckets,synth,timing}``.

Exit codes: 0 success, 1 usage error, 2 no usable data.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .chunkio import load_chunk, save_chunk
from .errors import RppgError, SingularDesign, SpecInvalid, UnknownColumn
from .estimators import EstimatorId, run_estimator
from .factors import SKIN_LEVELS, bucket_analysis, build_design, fit_ols
from .metrics import aggregate, evaluate_chunk, write_results_csv, ChunkMetrics
from .rates import HR_BAND, RR_BAND, FrequencyBand
from .synth import SynthSpec, generate
from .timing import measure_frame_time
from .trace import extract_trace

log = logging.getLogger("rppgbench")

EXIT_OK, EXIT_USAGE, EXIT_NO_DATA = 0, 1, 2

METRIC_COLUMNS = ["hr_est", "hr_ae", "pulse_snr", "pulse_r", "rr_est", "rr_ae", "resp_snr", "resp_r"]
FACTOR_COLUMNS = (
    ["hr", "rr", "age", "gender_male", "skin_type"]
    + [f"skin_type_{lv}" for lv in SKIN_LEVELS]
    + ["movement", "illuminance_var", "camera_stationary"]
)
CHUNK_METRICS_HEADER = ["chunk", "method"] + METRIC_COLUMNS + FACTOR_COLUMNS
PULSE_FACTORS = "age,gender_male,hr,skin_type,illuminance_var,movement,camera_stationary"


class UsageError(Exception):
    pass


def _error(command: str, message: str) -> None:
    print(f"rppgbench {command}: {message}", file=sys.stderr)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def find_chunks(root: Path) -> list[Path]:
    return sorted({p.parent for p in root.rglob("meta.json")})


def _evaluate_one(job):
    """Worker: evaluate one chunk with every method. Returns (rows, errors)."""
    root, chunk_dir, methods, hr_band, rr_band, with_resp = job
    rel = chunk_dir.relative_to(root).as_posix() or "."
    try:
        chunk = load_chunk(chunk_dir)
        trace = extract_trace(chunk)
    except (RppgError, OSError, ValueError) as exc:
        return [], [(rel, None, f"{type(exc).__name__}: {exc}")]
    md, lab = chunk.metadata, chunk.labels
    factors = {
        "hr": lab.hr_bpm, "rr": lab.rr_bpm, "age": md.age, "gender_male": md.gender_male,
        "skin_type": md.skin_type,
        **{f"skin_type_{lv}": int(md.skin_type == lv) for lv in SKIN_LEVELS},
        "movement": md.movement, "illuminance_var": md.illuminance_var,
        "camera_stationary": md.camera_stationary,
    }
    rows, errors = [], []
    for method in methods:
        try:
            result = run_estimator(method, chunk, trace=trace, with_resp=with_resp)
            m = evaluate_chunk(chunk, result, hr_band=hr_band, rr_band=rr_band)
        except (RppgError, ValueError) as exc:
            errors.append((rel, str(method), f"{type(exc).__name__}: {exc}"))
            continue
        row = {"chunk": rel, "method": str(method)}
        row.update({c: getattr(m, c) for c in METRIC_COLUMNS})
        row.update(factors)
        rows.append(row)
    return rows, errors


def write_chunk_metrics(rows, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHUNK_METRICS_HEADER)
        for r in rows:
            w.writerow([r["chunk"], r["method"]] + [_fmt(r[c]) for c in CHUNK_METRICS_HEADER[2:]])


def read_table(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _opt(v):
    return None if v in ("", None) else float(v)


def cmd_run(args) -> int:
    root = Path(args.dataset)
    if not root.is_dir():
        raise UsageError(f"dataset root {root} does not exist")
    methods = _parse_methods(args.methods)
    hr_band = FrequencyBand(*args.hr_band) if args.hr_band else HR_BAND
    rr_band = FrequencyBand(*args.rr_band) if args.rr_band else RR_BAND
    chunks = find_chunks(root)
    if not chunks:
        _error("run", f"no chunk directories (meta.json) under {root}")
        return EXIT_NO_DATA
    jobs = [(root, c, methods, hr_band, rr_band, not args.no_resp) for c in chunks]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_evaluate_one, jobs))
    else:
        results = [_evaluate_one(j) for j in jobs]

    rows = [r for rs, _ in results for r in rs]
    errors = [e for _, es in results for e in es]
    for chunk, method, msg in errors:
        log.warning("skipped %s%s: %s", chunk, f" [{method}]" if method else "", msg)
    failed_chunks = {c for c, _, _ in errors}
    if not rows:
        _error("run", f"all {len(chunks)} chunks failed; nothing to report")
        return EXIT_NO_DATA

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_chunk_metrics(rows, out / "chunk_metrics.csv")
    reports = []
    for method in methods:
        mrows = [r for r in rows if r["method"] == str(method)]
        if not mrows:
            continue
        metrics = [ChunkMetrics(**{k: r[k] for k in METRIC_COLUMNS}) for r in mrows]
        inference_ms = None
        if args.timing_iterations > 0:
            ref = load_chunk(root / mrows[0]["chunk"])
            inference_ms = measure_frame_time(
                method, ref.height, ref.width, args.timing_iterations, seed=args.seed, fps=ref.fps
            ).mean_ms
        reports.append(aggregate(metrics, str(method), inference_ms))
    write_results_csv(reports, out / "results.csv")

    print(f"evaluated {len(chunks) - len(failed_chunks)}/{len(chunks)} chunks, skipped {len(failed_chunks)}")
    for rep in reports:
        print(f"{rep.method:>6}: HR MAE {rep.hr_mae:.3f} bpm, pulse SNR {rep.pulse_snr:.2f} dB, "
              f"r {rep.pulse_r:.3f} (n={rep.n_chunks})")
    return EXIT_OK


def _select_method(rows, method):
    methods = sorted({r.get("method", "") for r in rows})
    if method:
        sel = [r for r in rows if r.get("method") == method]
        if not sel:
            raise UsageError(f"no rows for method {method!r}; available: {', '.join(methods)}")
        return sel
    if len(methods) > 1:
        raise UsageError(f"table holds several methods ({', '.join(methods)}); choose one with --method")
    return rows


def cmd_regress(args) -> int:
    rows = _select_method(read_table(Path(args.chunk_metrics)), args.method)
    if rows and args.target not in rows[0]:
        raise UsageError(f"unknown target column {args.target!r}")
    rows = [r for r in rows if r.get(args.target, "") != ""]
    if not rows:
        _error("regress", f"no rows with a value for {args.target}")
        return EXIT_NO_DATA
    factors = [f.strip() for f in args.factors.split(",") if f.strip()]
    try:
        X = build_design(rows, factors)
        report = fit_ols(X, [float(r[args.target]) for r in rows], dep_variable=args.target)
    except UnknownColumn as exc:
        raise UsageError(str(exc)) from exc
    except SingularDesign as exc:
        _error("regress", f"singular design: collinear columns {', '.join(exc.columns)}")
        return EXIT_NO_DATA
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"regression_{args.target}"
    (out / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")
    text = report.summary()
    (out / f"{stem}.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_buckets(args) -> int:
    rows = _select_method(read_table(Path(args.chunk_metrics)), args.method)
    if not rows:
        return EXIT_NO_DATA
    if args.factor not in rows[0]:
        raise UsageError(f"unknown factor column {args.factor!r}")
    edges = [float(e) for e in args.edges.split(",")]

    class _Obs:
        __slots__ = ("pulse_snr", "resp_snr")

        def __init__(self, row):
            self.pulse_snr = _opt(row.get("pulse_snr"))
            self.resp_snr = _opt(row.get("resp_snr"))

    report = bucket_analysis([(float(r[args.factor]), _Obs(r)) for r in rows], edges)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = report.to_csv()
    (out / f"impact_{args.factor}.csv").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


SPEC_FLAGS = [f for f in fields(SynthSpec) if f.name != "seed"]


def _spec_for(args, index: int) -> SynthSpec:
    kw = {f.name: getattr(args, f.name) for f in SPEC_FLAGS}
    seed = args.seed + index
    rng = np.random.default_rng([seed, 7])
    if args.hr_range:
        kw["hr_bpm"] = float(rng.uniform(*args.hr_range))
    if args.rr_range:
        kw["rr_bpm"] = float(rng.uniform(*args.rr_range))
    return SynthSpec(seed=seed, **kw)


def cmd_synth(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    try:
        specs = [_spec_for(args, i) for i in range(args.count)]
    except SpecInvalid as exc:
        _error("synth", f"invalid synthetic spec: {exc}")
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = [["path", "seed", "hr_bpm", "rr_bpm", "pixel_noise_sd", "illum_drift_amplitude"]]
    for i, spec in enumerate(specs):
        name = f"chunk_{i:04d}"
        save_chunk(generate(spec), out / name)
        manifest.append([name, spec.seed, _fmt(spec.hr_bpm), _fmt(spec.rr_bpm),
                         _fmt(spec.pixel_noise_sd), _fmt(spec.illum_drift_amplitude)])
    with open(out / "manifest.csv", "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(manifest)
    print(f"wrote {len(specs)} chunks to {out}")
    return EXIT_OK


def cmd_timing(args) -> int:
    if args.iterations < 1:
        raise UsageError("--iterations must be >= 1")
    h, w = args.size
    res = measure_frame_time(args.method, h, w, args.iterations, seed=args.seed, backend=args.backend)
    info = res.as_dict()
    print(f"{res.method} {h}x{w} [{res.backend}]: {res.mean_ms:.4f} ms/frame "
          f"(sd {res.sd_ms:.4f}, {res.iterations} iterations)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "timing.json").write_text(json.dumps(info, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _parse_methods(text: str) -> list[EstimatorId]:
    names = [m.strip().upper() for m in text.split(",") if m.strip()]
    if not names:
        raise UsageError("method set must not be empty")
    try:
        return [EstimatorId(n) for n in dict.fromkeys(names)]
    except ValueError as exc:
        raise UsageError(f"unknown method in {text!r}; choose from G, CHROM, POS") from exc


def _size(text: str):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("frame size must be positive")
    return h, w


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base random seed")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="parallel worker processes")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="rppgbench", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="evaluate estimators over a dataset of chunks")
    r.add_argument("dataset", help="directory containing chunk directories")
    r.add_argument("--methods", default="G,CHROM,POS")
    r.add_argument("--hr-band", type=float, nargs=2, metavar=("LO_HZ", "HI_HZ"))
    r.add_argument("--rr-band", type=float, nargs=2, metavar=("LO_HZ", "HI_HZ"))
    r.add_argument("--no-resp", action="store_true", help="skip the landmark respiration estimate")
    r.add_argument("--timing-iterations", type=int, default=0,
                   help="also measure per-frame latency for results.csv (0 disables)")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("regress", parents=[common], help="OLS of SNR on chunk factors")
    g.add_argument("chunk_metrics")
    g.add_argument("--target", choices=["pulse_snr", "resp_snr"], default="pulse_snr")
    g.add_argument("--factors", default=PULSE_FACTORS, help="comma-separated factor columns")
    g.add_argument("--method", help="restrict to one estimator's rows")
    g.set_defaults(func=cmd_regress)

    b = sub.add_parser("buckets", parents=[common], help="mean/SD of SNR per factor bucket")
    b.add_argument("chunk_metrics")
    b.add_argument("--factor", required=True)
    b.add_argument("--edges", required=True, help="comma-separated, strictly increasing bin edges")
    b.add_argument("--method")
    b.set_defaults(func=cmd_buckets)

    s = sub.add_parser("synth", parents=[common], help="generate synthetic chunks")
    s.add_argument("--count", type=int, default=1)
    for f in SPEC_FLAGS:
        flag = "--" + f.name.replace("_", "-")
        if f.type in ("bool", bool):
            s.add_argument(flag, type=lambda v: v.lower() in ("1", "true", "yes"), default=f.default)
        else:
            typ = int if f.type in ("int", int) else float
            s.add_argument(flag, type=typ, default=f.default)
    s.add_argument("--hr-range", type=float, nargs=2, metavar=("LO_BPM", "HI_BPM"),
                   help="draw hr_bpm uniformly per chunk instead of using --hr-bpm")
    s.add_argument("--rr-range", type=float, nargs=2, metavar=("LO_BPM", "HI_BPM"))
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("timing", parents=[common], help="per-frame processing latency")
    t.add_argument("--method", type=lambda v: EstimatorId(v.upper()), default=EstimatorId.POS)
    t.add_argument("--size", type=_size, default=(64, 64), help="frame size HxW")
    t.add_argument("--iterations", type=int, default=1000)
    t.add_argument("--backend", choices=["cython", "python"], help="kernel backend (default: best available)")
    t.set_defaults(func=cmd_timing)
    return p


GLOBAL_DEFAULTS = {"out": None, "seed": 0, "workers": 1, "verbose": False}
COMMAND_OUT_DEFAULT = {"run": "out", "regress": "out", "buckets": "out", "synth": "synth_out", "timing": None}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if args.out is None:
        args.out = COMMAND_OUT_DEFAULT[args.command]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        _error(args.command, "--workers must be >= 1")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        _error(args.command, str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
