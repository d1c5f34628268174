"""Command-line front end: ``simulate``, ``analyze`` and ``sweep``.

Exit codes: 0 success, 2 unparseable input (config or CSV), 3 a value
constraint is violated, 4 the simulation aborted.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from rbis5g import __version__
from rbis5g.clockcore import Instant
from rbis5g.errors import ConfigError, ConfigInvariantError, SimulationAbort
from rbis5g.estimator import TimestampTuple
from rbis5g.simharness import (
    coverage_check,
    parse_config,
    run_scenario,
    skew_series_from_tuples,
    stats_summary,
)
from rbis5g.simharness.scenario import DEFAULT_SWEEP
from rbis5g.simharness.stats import MIN_COVERAGE_SAMPLES

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_ABORT = 0, 2, 3, 4

SUMMARY_HEADER = ["quantity", "filter_n", "unit", "count", "median", "mean", "sigma",
                  "two_sigma", "three_sigma", "coverage_1sigma", "coverage_2sigma",
                  "coverage_3sigma"]
TUPLES_HEADER = ["t_master_ps", "t_slave_ps"]
EDGES_HEADER = ["index", "at_true_time_ps", "theta_measured_ps", "theta_measured_ns"]
SKEW_HEADER = ["index", "t_master_ps", "skew_ppm"]


class InputError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float, digits: int = 6) -> str:
    s = f"{x:.{digits}f}"
    return "0." + "0" * digits if s == "-0." + "0" * digits else s


def _ns(ps: int) -> str:
    sign = "-" if ps < 0 else ""
    whole, frac = divmod(abs(ps), 1000)
    return f"{sign}{whole}.{frac:03d}"


def summary_rows(skew_series: dict, offsets_ns=None, offset_filter_n=None) -> list[list[str]]:
    rows = []
    for n in sorted(skew_series):
        s = stats_summary(skew_series[n], "ppm")
        rows.append(["skew", str(n), s.unit, str(s.count), _fmt(s.median), _fmt(s.mean),
                     _fmt(s.sigma), _fmt(s.two_sigma), _fmt(s.three_sigma), "", "", ""])
    if offsets_ns:
        s = stats_summary(offsets_ns, "ns")
        cov = ["", "", ""]
        if len(offsets_ns) >= MIN_COVERAGE_SAMPLES:
            cov = [_fmt(c) for c in coverage_check(offsets_ns)]
        rows.append(["offset", "" if offset_filter_n is None else str(offset_filter_n), s.unit,
                     str(s.count), _fmt(s.median), _fmt(s.mean), _fmt(s.sigma),
                     _fmt(s.two_sigma), _fmt(s.three_sigma), *cov])
    return rows


def _load_config_bytes(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}", EXIT_PARSE) from exc
    try:
        cfg = parse_config(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise InputError(f"config {path} is not UTF-8", EXIT_PARSE) from exc
    return raw, cfg


def _write_manifest(out: Path, command, config_path, raw, seed) -> None:
    manifest = {
        "command": command,
        "config_path": str(config_path) if config_path else None,
        "config_sha256": hashlib.sha256(raw).hexdigest() if raw is not None else None,
        "seed": seed,
        "output_dir": str(out),
        "tool_version": __version__,
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _prepare_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_report(report, out: Path) -> None:
    cfg = report.config
    _atomic_write(out / "tuples.csv", _csv_text(
        TUPLES_HEADER, ([t.t_master.ps, t.t_slave.ps] for t in report.tuples)))
    start = cfg.max_filter_n
    for n, series in report.skew_series.items():
        rows = ([start + i, report.tuples[start + i].t_master.ps, _fmt(v, 12)]
                for i, v in enumerate(series))
        _atomic_write(out / f"skew_estimates_N{n}.csv", _csv_text(SKEW_HEADER, rows))
    _atomic_write(out / "edge_offsets.csv", _csv_text(
        EDGES_HEADER, ([i, m.at_true_time.ps, m.theta_measured.ps, _ns(m.theta_measured.ps)]
                       for i, m in enumerate(report.edges))))
    _atomic_write(out / "summary.csv", _csv_text(
        SUMMARY_HEADER,
        summary_rows(report.skew_series, report.offset_series_ns(), cfg.prediction_filter_n)))


def cmd_simulate(args) -> int:
    raw, cfg = _load_config_bytes(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = _prepare_out(args.out)
    _write_manifest(out, "simulate", args.config, raw, cfg.seed)
    write_report(run_scenario(cfg), out)
    return EXIT_OK


def read_tuples_csv(path) -> list[TimestampTuple]:
    """Parse a ``t_master_ps,t_slave_ps`` log; master times must strictly increase."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}", EXIT_PARSE) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TUPLES_HEADER:
            raise InputError(f"{path}:1: expected header {','.join(TUPLES_HEADER)}", EXIT_PARSE)
        tuples = []
        prev = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(row)}", EXIT_PARSE)
            try:
                t_m, t_s = int(row[0]), int(row[1])
            except ValueError:
                raise InputError(f"{path}:{lineno}: timestamps must be integer picoseconds",
                                 EXIT_PARSE) from None
            if prev is not None and t_m <= prev:
                raise InputError(f"{path}:{lineno}: t_master_ps not strictly increasing",
                                 EXIT_INVARIANT)
            prev = t_m
            tuples.append(TimestampTuple(Instant(t_m), Instant(t_s)))
    return tuples


def read_edges_csv(path) -> list[float]:
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}", EXIT_PARSE) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EDGES_HEADER:
            raise InputError(f"{path}:1: expected header {','.join(EDGES_HEADER)}", EXIT_PARSE)
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(int(row[2]) / 1000)
            except (ValueError, IndexError):
                raise InputError(f"{path}:{lineno}: malformed edge row", EXIT_PARSE) from None
    return values


def _parse_sweep(text) -> tuple[int, ...]:
    try:
        sweep = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InputError(f"--filters: expected comma-separated integers, got {text!r}",
                         EXIT_PARSE) from None
    if not sweep or min(sweep) < 1:
        raise InputError("--filters: window sizes must be positive", EXIT_INVARIANT)
    return sweep


def cmd_analyze(args) -> int:
    raw = None
    sweep, series_length, offset_n = DEFAULT_SWEEP, None, None
    if args.config:
        raw, cfg = _load_config_bytes(args.config)
        sweep, series_length, offset_n = cfg.filter_sweep, cfg.skew_series_length, cfg.prediction_filter_n
    if args.filters:
        sweep = _parse_sweep(args.filters)
    if args.series_length is not None:
        series_length = args.series_length
    tuples = read_tuples_csv(args.tuples)
    offsets = read_edges_csv(args.edges) if args.edges else None
    try:
        series = skew_series_from_tuples(tuples, sweep, series_length)
    except ValueError as exc:
        raise InputError(f"{args.tuples}: {exc}", EXIT_INVARIANT) from exc
    out = _prepare_out(args.out)
    _write_manifest(out, "analyze", args.config, raw, None)
    _atomic_write(out / "summary.csv",
                  _csv_text(SUMMARY_HEADER, summary_rows(series, offsets, offset_n)))
    return EXIT_OK


def _sweep_one(cfg):
    report = run_scenario(cfg)
    return cfg.seed, report.skew_series


def cmd_sweep(args) -> int:
    raw, cfg = _load_config_bytes(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    seeds = [cfg.seed]
    if args.seeds:
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError:
            raise InputError(f"--seeds: expected comma-separated integers, got {args.seeds!r}",
                             EXIT_PARSE) from None
    out = _prepare_out(args.out)
    _write_manifest(out, "sweep", args.config, raw, seeds[0] if len(seeds) == 1 else seeds)
    cfgs = [cfg.with_seed(s) for s in seeds]
    if args.jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, cfgs))
    else:
        results = [_sweep_one(c) for c in cfgs]
    summary, series_rows = [], []
    for seed, series in results:
        summary.extend([str(seed), *row] for row in summary_rows(series))
        for n in sorted(series):
            series_rows.extend([seed, n, i, _fmt(v, 12)] for i, v in enumerate(series[n]))
    _atomic_write(out / "summary.csv", _csv_text(["seed", *SUMMARY_HEADER], summary))
    _atomic_write(out / "sweep_series.csv",
                  _csv_text(["seed", "filter_n", "index", "skew_ppm"], series_rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbis5g", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and write CSV results")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; runs are sequential")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="recompute statistics from a tuple log")
    p.add_argument("--tuples", required=True, help="CSV with header t_master_ps,t_slave_ps")
    p.add_argument("--edges", help="edge_offsets.csv to add the offset row")
    p.add_argument("--filters", help="comma-separated window sizes (default 1,2,4,...,1024)")
    p.add_argument("--series-length", type=int, help="estimates per window size (default: all)")
    p.add_argument("--config", help="take filter sweep and series length from a scenario config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="skew statistics per window size")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="comma-separated seeds, one run each")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs across --seeds")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigInvariantError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConfigError as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SimulationAbort as exc:
        where = ", ".join(f"{k}={v}" for k, v in (("event", exc.event_index), ("device", exc.device))
                          if v is not None)
        print(f"simulation aborted: {exc}" + (f" [{where}]" if where else ""), file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
