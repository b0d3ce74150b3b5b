"""Command-line front end.

    pllnoise fit --input ubx.csv --out params.json --report fit.json --plot fit.svg
    pllnoise synth psd --params params.json --fmin 100 --fmax 1e7 --ppd 50 --out t.csv
    pllnoise synth timeseries --params params.json --fs 50e6 --n 1048576 --verify welch.csv
    pllnoise aggregate fits/ --out table.json --csv table.csv
    pllnoise eval --params params.json --freq 20000

Exit status: 0 success, 2 success with warnings (e.g. partial fit), 1 failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FormatError, PllNoiseError
from .estimation import (
    FitConfig,
    FitReport,
    aggregate_params,
    aggregate_to_dict,
    fit_params,
    fit_report_from_dict,
    fit_report_to_dict,
)
from .ingest import DEFAULT_POINTS_PER_DECADE, read_psd_csv, write_psd_csv
from .model import (
    PllNoiseParams,
    eval_full_model,
    eval_lp_model,
    load_params,
    params_from_dict,
    params_to_dict,
)
from .segmentation import SectionThresholds, section_map_to_dict
from .svg import Curve, psd_plot_svg
from .synthesis import (
    synth_phase_timeseries,
    synth_psd,
    welch_psd,
    write_timeseries,
    write_timeseries_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_WARN = 0, 1, 2
EVAL_HEADER = "offset_hz,model_dbc_hz"


class UsageError(PllNoiseError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means "success with warnings" here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    inputs: list[Path] = field(default_factory=list)
    outputs: dict[str, Path] = field(default_factory=dict)
    f0: float | None = None
    points_per_decade: int | None = DEFAULT_POINTS_PER_DECADE
    thresholds: SectionThresholds = field(default_factory=SectionThresholds)
    normalization: str = "mean"
    seed: int | None = None
    analyzer_floor_dbchz: float | None = None
    quiet: bool = False
    jobs: int = 4

    def validate_paths(self, output_dirs: tuple[str, ...] = ()) -> None:
        for path in self.inputs:
            if not path.exists():
                raise UsageError(f"input not found: {path}")
        for key, path in self.outputs.items():
            if key in output_dirs:
                continue
            parent = path.parent if str(path.parent) else Path(".")
            if not parent.is_dir():
                raise UsageError(f"output directory does not exist: {parent}")
            if path.is_dir():
                raise UsageError(f"output path is a directory: {path}")
            if any(path.resolve() == p.resolve() for p in self.inputs):
                raise UsageError(f"refusing to overwrite input {path}")


# -- argument types ----------------------------------------------------------------


def _float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def _count(text: str) -> int:
    value = _float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"not a non-negative integer: {text!r}")
    return int(value)


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--quiet", action="store_true", default=default(False), help="no progress output")
    parser.add_argument("--seed", type=_count, default=default(None), help="RNG seed")
    parser.add_argument(
        "--normalization",
        choices=("paper", "mean"),
        default=default("mean"),
        help="divide estimator sums by M (mean) or M-1 (paper)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pllnoise", description="PLL phase-noise parameter estimation and synthesis"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate model parameters from measured traces")
    _add_global_flags(fit, suppress=True)
    fit.add_argument("--input", required=True, type=Path, help="PSD CSV file or directory of CSVs")
    fit.add_argument("--out", type=Path, help="params JSON (directory when --input is a directory)")
    fit.add_argument("--report", type=Path, help="full fit report JSON")
    fit.add_argument("--segments", type=Path, help="segment/section map JSON")
    fit.add_argument("--plot", type=Path, help="SVG overlay of trace, sections and fitted model")
    fit.add_argument("--aggregate", type=Path, help="aggregate JSON over all inputs (directory input)")
    fit.add_argument("--f0", type=_float, help="carrier frequency override, Hz")
    fit.add_argument(
        "--ppd",
        type=_count,
        default=DEFAULT_POINTS_PER_DECADE,
        help="resample to this many points per decade before fitting (0 = off)",
    )
    fit.add_argument("--steep-threshold", type=_float, default=-20.0, help="dB/decade")
    fit.add_argument("--flat-threshold", type=_float, default=-10.0, help="dB/decade")
    fit.add_argument("--analyzer-floor", type=_float, help="analyzer noise floor, dBc/Hz")
    fit.add_argument("--jobs", type=_count, default=4, help="parallel files for directory input")

    synth = sub.add_parser("synth", help="synthesize PSD traces or phase time series")
    _add_global_flags(synth, suppress=True)
    ssub = synth.add_subparsers(dest="synth_kind", required=True)
    psd = ssub.add_parser("psd", help="model PSD trace as CSV")
    _add_global_flags(psd, suppress=True)
    psd.add_argument("--params", required=True, type=Path)
    psd.add_argument("--fmin", type=_float, default=100.0)
    psd.add_argument("--fmax", type=_float, default=10e6)
    psd.add_argument("--ppd", type=_count, default=50)
    psd.add_argument("--noise-db", type=_float, default=0.0, help="Gaussian dB noise std")
    psd.add_argument("--label", default="synthetic")
    psd.add_argument("--out", required=True, type=Path)
    ts = ssub.add_parser("timeseries", help="phase-noise sample path")
    _add_global_flags(ts, suppress=True)
    ts.add_argument("--params", required=True, type=Path)
    ts.add_argument("--fs", type=_float, required=True, help="sample rate, Hz")
    ts.add_argument("--n", type=_count, default=2 ** 20, help="length (power of two)")
    ts.add_argument("--out", type=Path, help="binary PNTS output")
    ts.add_argument("--csv", type=Path, help="CSV export (sample_index, phase_rad)")
    ts.add_argument("--verify", type=Path, help="write the Welch PSD of the series as a trace CSV")
    ts.add_argument("--segment-length", type=_count, default=2 ** 14)
    ts.add_argument("--overlap", type=_float, default=0.5)

    agg = sub.add_parser("aggregate", help="mean/std of parameters across devices")
    _add_global_flags(agg, suppress=True)
    agg.add_argument("inputs", nargs="+", type=Path, help="params/fit JSON files or directories")
    agg.add_argument("--out", type=Path, help="aggregate JSON (default: stdout)")
    agg.add_argument("--csv", type=Path, help="table CSV (parameter, mean, std, unit)")

    ev = sub.add_parser("eval", help="evaluate the model at given offsets")
    _add_global_flags(ev, suppress=True)
    ev.add_argument("--params", required=True, type=Path)
    ev.add_argument("--freq", type=_float, nargs="+", help="offset frequencies, Hz")
    ev.add_argument("--fmin", type=_float)
    ev.add_argument("--fmax", type=_float)
    ev.add_argument("--ppd", type=_count, default=50)
    ev.add_argument("--asymptotes", action="store_true", help="add reference and VCO low-pass columns")
    ev.add_argument("--out", type=Path)
    return parser


# -- helpers -----------------------------------------------------------------------


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def info(self, msg: str) -> None:
        if not self.quiet:
            print(msg)

    @staticmethod
    def error(msg: str) -> None:
        print(f"pllnoise: error: {msg}", file=sys.stderr)

    @staticmethod
    def warn(msg: str) -> None:
        print(f"pllnoise: warning: {msg}", file=sys.stderr)


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _read_json(path: Path) -> dict:
    def reject(token):
        raise FormatError(f"{path}: {token} is not permitted")

    with open(path, encoding="utf-8") as fh:
        return json.load(fh, parse_constant=reject)


def _fit_plot(trace, report: FitReport) -> str:
    curves = [Curve(trace.offsets, trace.levels, label=trace.label or "measured", color="#1f77b4")]
    p = report.params
    if p.f_c_ref is not None:
        curves.append(
            Curve(trace.offsets, eval_lp_model(p.f_c_ref, trace.offsets), "reference LP", "#2ca02c", dashed=True)
        )
    if p.f_c_vco is not None:
        curves.append(
            Curve(trace.offsets, eval_lp_model(p.f_c_vco, trace.offsets), "VCO LP", "#ff7f0e", dashed=True)
        )
    if p.is_complete:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            curves.append(Curve(trace.offsets, eval_full_model(p, trace.offsets), "fitted model", "#d62728", width=2))
    bounds = sorted(
        {edge for rng in report.sections.ranges.values() if rng is not None for edge in rng}
    )
    lo, hi = trace.levels.min() - 10, trace.levels.max() + 10
    for c in curves[1:]:
        c.levels = np.clip(c.levels, lo, hi)
    return psd_plot_svg(curves, bounds, title=f"Phase noise fit: {trace.label}".rstrip(": "))


# -- commands ------------------------------------------------------------------------


def _fit_one(path: Path, cfg: RunConfig):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        trace = read_psd_csv(path, f0=cfg.f0)
    fit_cfg = FitConfig(
        thresholds=cfg.thresholds,
        normalization=cfg.normalization,
        points_per_decade=cfg.points_per_decade or None,
        analyzer_floor_dbchz=cfg.analyzer_floor_dbchz,
    )
    report = fit_params(trace, fit_cfg)
    return trace, report, [str(w.message) for w in caught]


def cmd_fit(cfg: RunConfig) -> int:
    con = _Console(cfg.quiet)
    src = cfg.inputs[0]
    if src.is_dir():
        return _fit_directory(cfg, con)
    trace, report, ingest_notes = _fit_one(src, cfg)
    for note in ingest_notes:
        con.warn(f"{src}: {note}")
    params_json = params_to_dict(report.params)
    if "out" in cfg.outputs:
        _write_json(cfg.outputs["out"], params_json)
    else:
        con.info(json.dumps(params_json, indent=2))
    if "report" in cfg.outputs:
        _write_json(cfg.outputs["report"], fit_report_to_dict(report))
    if "segments" in cfg.outputs:
        _write_json(cfg.outputs["segments"], section_map_to_dict(report.sections))
    if "plot" in cfg.outputs:
        cfg.outputs["plot"].write_text(_fit_plot(trace, report), encoding="utf-8")
    if "aggregate" in cfg.outputs:
        _write_json(cfg.outputs["aggregate"], aggregate_to_dict(aggregate_params([report.params])))
    for note in report.warnings:
        con.warn(note)
    if report.residual_rms_db is not None:
        con.info(f"residual rms {report.residual_rms_db:.3f} dB")
    return EXIT_WARN if report.warnings else EXIT_OK


def _fit_directory(cfg: RunConfig, con: _Console) -> int:
    src = cfg.inputs[0]
    files = sorted(p for p in src.iterdir() if p.suffix.lower() == ".csv")
    if not files:
        raise UsageError(f"no .csv files in {src}")
    out_dir = cfg.outputs.get("out")
    if out_dir is None:
        raise UsageError("--out DIR is required when --input is a directory")
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(path):
        try:
            return path, _fit_one(path, cfg), None
        except (PllNoiseError, ValueError, OSError) as exc:
            return path, None, exc

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(work, files))

    status = EXIT_OK
    fitted = []
    for path, res, exc in results:
        if exc is not None:
            con.error(f"{path}: {exc}")
            status = EXIT_FAIL
            continue
        trace, report, ingest_notes = res
        stem = path.stem
        _write_json(out_dir / f"{stem}.params.json", params_to_dict(report.params))
        _write_json(out_dir / f"{stem}.fit.json", fit_report_to_dict(report))
        for note in ingest_notes + report.warnings:
            con.warn(f"{path.name}: {note}")
        if report.warnings and status == EXIT_OK:
            status = EXIT_WARN
        fitted.append(report.params)
        con.info(f"{path.name}: fitted")
    if "aggregate" in cfg.outputs and fitted:
        _write_json(cfg.outputs["aggregate"], aggregate_to_dict(aggregate_params(fitted)))
    return status


def cmd_synth(cfg: RunConfig, args) -> int:
    con = _Console(cfg.quiet)
    params = load_params(cfg.inputs[0])
    if args.synth_kind == "psd":
        trace = synth_psd(
            params,
            args.fmin,
            args.fmax,
            args.ppd,
            noise_sigma_db=args.noise_db,
            seed=cfg.seed,
            label=args.label,
        )
        write_psd_csv(trace, cfg.outputs["out"])
        con.info(f"wrote {len(trace)} points to {cfg.outputs['out']}")
        return EXIT_OK

    series = synth_phase_timeseries(params, args.fs, args.n, seed=cfg.seed)
    if "out" in cfg.outputs:
        write_timeseries(series, cfg.outputs["out"])
    if "csv" in cfg.outputs:
        write_timeseries_csv(series, cfg.outputs["csv"])
    if "verify" in cfg.outputs:
        trace = welch_psd(series, args.segment_length, args.overlap, f0=params.f0)
        write_psd_csv(trace, cfg.outputs["verify"])
        lo, hi = 10 * args.fs / args.segment_length, args.fs / 8
        band = (trace.offsets >= lo) & (trace.offsets <= hi)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dev = np.abs(trace.levels[band] - eval_full_model(params, trace.offsets[band]))
        con.info(f"welch vs model on {lo:g}-{hi:g} Hz: median |dev| {np.median(dev):.2f} dB")
    con.info(f"generated {len(series)} samples at {args.fs:g} Hz (var {series.phase.var():.4g} rad^2)")
    return EXIT_OK


def _load_any_params(path: Path) -> PllNoiseParams | None:
    data = _read_json(path)
    if "params" in data:
        return fit_report_from_dict(data).params
    if "f0_hz" in data:
        return params_from_dict(data)
    if "parameters" in data and "n_devices" in data:
        return None  # an aggregate table, not a device
    raise FormatError(f"{path}: neither a params nor a fit-report JSON")


def cmd_aggregate(cfg: RunConfig) -> int:
    con = _Console(cfg.quiet)
    files: list[Path] = []
    for src in cfg.inputs:
        files.extend(sorted(src.glob("*.json")) if src.is_dir() else [src])
    fits = []
    for path in files:
        p = _load_any_params(path)
        if p is None:
            con.warn(f"skipping aggregate table {path}")
            continue
        fits.append(p)
    if not fits:
        raise UsageError("no parameter sets found")
    agg = aggregate_params(fits)
    table = aggregate_to_dict(agg)
    if "out" in cfg.outputs:
        _write_json(cfg.outputs["out"], table)
    else:
        con.info(json.dumps(table, indent=2))
    if "csv" in cfg.outputs:
        write_aggregate_csv(table, cfg.outputs["csv"])
    return EXIT_OK


def write_aggregate_csv(table: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# n_devices={table['n_devices']}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["parameter", "mean", "std", "unit"])
        for name, entry in table["parameters"].items():
            std = entry.get("std")
            writer.writerow([name, repr(entry["mean"]), "" if std is None else repr(std), entry["unit"]])


def read_aggregate_csv(path) -> dict:
    """Inverse of :func:`write_aggregate_csv`; returns the aggregate table dict."""
    n_devices = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key.strip() == "n_devices":
                n_devices = int(value)
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(body)
    if reader.fieldnames != ["parameter", "mean", "std", "unit"]:
        raise FormatError(f"unexpected aggregate CSV header {reader.fieldnames}")
    params = {}
    for row in reader:
        entry = {"mean": float(row["mean"])}
        if row["std"]:
            entry["std"] = float(row["std"])
        entry["unit"] = row["unit"]
        params[row["parameter"]] = entry
        rows.append(row)
    if n_devices is None:
        raise FormatError("aggregate CSV lacks n_devices")
    return {"n_devices": n_devices, "parameters": params}


def _eval_grid(fmin: float, fmax: float, ppd: int) -> np.ndarray:
    if not (0 < fmin < fmax):
        raise UsageError(f"need 0 < fmin < fmax, got {fmin:g}, {fmax:g}")
    if ppd < 1:
        raise UsageError("--ppd must be >= 1")
    n = int(math.ceil(math.log10(fmax / fmin) * ppd - 1e-9)) + 1
    grid = np.geomspace(fmin, fmax, n)
    grid[0], grid[-1] = fmin, fmax
    return grid


def cmd_eval(cfg: RunConfig, args) -> int:
    params = load_params(cfg.inputs[0])
    if args.freq:
        freqs = np.array(args.freq, dtype=float)
        if np.any(freqs <= 0):
            raise UsageError("frequencies must be positive")
        header = False
    elif args.fmin is not None and args.fmax is not None:
        freqs = _eval_grid(args.fmin, args.fmax, args.ppd)
        header = True
    else:
        raise UsageError("give --freq or both --fmin and --fmax")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cols = [freqs, np.atleast_1d(eval_full_model(params, freqs))]
    names = ["offset_hz", "model_dbc_hz"]
    if args.asymptotes:
        if params.f_c_ref is None or params.f_c_vco is None:
            raise UsageError("asymptotes need both f_c_ref and f_c_vco")
        cols += [
            np.atleast_1d(eval_lp_model(params.f_c_ref, freqs)),
            np.atleast_1d(eval_lp_model(params.f_c_vco, freqs)),
        ]
        names += ["ref_lp_dbc_hz", "vco_lp_dbc_hz"]
    buf = io.StringIO()
    if header or "out" in cfg.outputs:
        buf.write(",".join(names) + "\n")
    for row in zip(*cols):
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    if "out" in cfg.outputs:
        cfg.outputs["out"].write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def read_eval_csv(path) -> dict[str, np.ndarray]:
    """Columns of an ``eval --out`` file keyed by header name."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != EVAL_HEADER.split(","):
            raise FormatError(f"unexpected eval CSV header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


# -- entry point ------------------------------------------------------------------------


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        seed=args.seed,
        normalization=args.normalization,
        quiet=args.quiet,
    )
    outputs = {}
    if args.command == "fit":
        cfg.inputs = [args.input]
        cfg.f0 = args.f0
        cfg.points_per_decade = args.ppd or None
        cfg.thresholds = SectionThresholds(args.steep_threshold, args.flat_threshold)
        cfg.analyzer_floor_dbchz = args.analyzer_floor
        cfg.jobs = args.jobs
        for key in ("out", "report", "segments", "plot", "aggregate"):
            if getattr(args, key) is not None:
                outputs[key] = getattr(args, key)
    elif args.command == "synth":
        cfg.inputs = [args.params]
        keys = ("out",) if args.synth_kind == "psd" else ("out", "csv", "verify")
        for key in keys:
            if getattr(args, key) is not None:
                outputs[key] = getattr(args, key)
    elif args.command == "aggregate":
        cfg.inputs = list(args.inputs)
        for key in ("out", "csv"):
            if getattr(args, key) is not None:
                outputs[key] = getattr(args, key)
    elif args.command == "eval":
        cfg.inputs = [args.params]
        if args.out is not None:
            outputs["out"] = args.out
    cfg.outputs = outputs
    dir_outputs = ("out",) if args.command == "fit" and args.input.is_dir() else ()
    cfg.validate_paths(dir_outputs)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if cfg.command == "fit":
            return cmd_fit(cfg)
        if cfg.command == "synth":
            return cmd_synth(cfg, args)
        if cfg.command == "aggregate":
            return cmd_aggregate(cfg)
        return cmd_eval(cfg, args)
    except (PllNoiseError, ValueError, OSError) as exc:
        _Console.error(str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
