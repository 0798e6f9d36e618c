"""Configuration-driven command line: run one job, emit CSV and plot data.

Usage: ``levyflow run CONFIG [--out DIR] [--dry-run] [--verbose]``.

Output files are written atomically (temp file then rename) and listed in a
``manifest.json`` with SHA-256 digests; identical configuration plus seed
reproduces identical digests.  Exit codes: 0 success, 2 validation failure,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass

from .config import ConfigError, RunConfig, parse_config
from .flow import (
    ScanResult,
    Series,
    correlation_functional,
    effective_action_series,
    partition_function_series,
    renormalized_correlation,
    td_limit_scan,
    vacuum_counterterm,
)
from .graphs import classify, enumerate_configurations, parse_canonical
from .evaluator import evaluate_configuration
from .oracle import exp_series_check, mc_correlation, partition_transform_check
from .quadrature import QuadratureError

__all__ = ["RunReport", "run", "emit_plotdata", "main"]


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class RunReport:
    job_kind: str
    wall_time: float
    files: tuple[tuple[str, str, int], ...]  # (path, sha256, bytes)


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".levyflow-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _digest(path: str) -> tuple[str, int]:
    with open(path, "rb") as handle:
        data = handle.read()
    return hashlib.sha256(data).hexdigest(), len(data)


def _series_csv(series: Series) -> str:
    lines = ["# order,graph_count,value,error"]
    for m, term in enumerate(series.terms):
        lines.append(f"{m},{term.graph_count},{_fmt(term.value)},{_fmt(term.error)}")
    return "\n".join(lines) + "\n"


def emit_plotdata(result, path: str):
    """Two-column (x, y) plus error column, '#'-prefixed header."""
    if isinstance(result, Series):
        lines = ["# perturbative order, term value, error"]
        for m, term in enumerate(result.terms):
            lines.append(f"{m} {_fmt(term.value)} {_fmt(term.error)}")
    elif isinstance(result, ScanResult):
        lines = ["# cutoff scale, value, error"]
        for t0, value, error in result.rows:
            lines.append(f"{_fmt(t0)} {_fmt(value)} {_fmt(error)}")
    else:
        raise TypeError(f"cannot emit plot data for {type(result).__name__}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _job_enumerate(cfg: RunConfig, out):
    body = cfg.job
    wanted = body.get("filter", "all")
    rows = ["# canonical,connected,vacuum,classical"]
    for config in enumerate_configurations(tuple(body["degrees"])):
        cls = classify(config)
        keep = (wanted == "all"
                or (wanted == "connected" and cls.connected)
                or (wanted == "vacuum" and cls.vacuum)
                or (wanted == "classical" and cls.classical))
        if keep:
            rows.append(f"{config.canonical()},{int(cls.connected)},"
                        f"{int(cls.vacuum)},{int(cls.classical)}")
    out["configurations.csv"] = "\n".join(rows) + "\n"


def _job_evaluate(cfg: RunConfig, out):
    config = parse_canonical(cfg.job["graph"])
    res = evaluate_configuration(config, cfg.kernels, cfg.model, cfg.field,
                                 cfg.t, cfg.t0, cfg.scheme, mode=cfg.mode)
    out["value.csv"] = ("# graph,value,error,scheme,evaluations\n"
                        f"\"{config.canonical()}\",{_fmt(res.value)},"
                        f"{_fmt(res.error_estimate)},{res.scheme},"
                        f"{res.evaluations}\n")


def _job_series(cfg: RunConfig, out):
    kind = cfg.job["kind"]
    if kind == "partition":
        series = partition_function_series(cfg.kernels, cfg.model, cfg.field,
                                           cfg.t, cfg.t0, cfg.order,
                                           cfg.scheme, mode=cfg.mode)
    elif kind == "effective":
        series = effective_action_series(cfg.kernels, cfg.model, cfg.field,
                                         cfg.t, cfg.t0, cfg.order,
                                         cfg.scheme, mode=cfg.mode)
    elif kind == "correlation":
        series = correlation_functional(cfg.kernels, cfg.model, cfg.field,
                                        cfg.t0, cfg.order, cfg.scheme)
    else:
        series = renormalized_correlation(cfg.kernels, cfg.model, cfg.field,
                                          cfg.t0, cfg.order, cfg.scheme)
    out["series.csv"] = _series_csv(series)
    return series


def _job_counterterm(cfg: RunConfig, out):
    values = vacuum_counterterm(cfg.kernels, cfg.model, cfg.t0, cfg.order,
                                cfg.scheme)
    lines = ["# order,value"]
    for m, v in enumerate(values, start=1):
        lines.append(f"{m},{_fmt(v)}")
    out["counterterm.csv"] = "\n".join(lines) + "\n"


def _job_scan(cfg: RunConfig, out):
    body = cfg.job
    scan = td_limit_scan(cfg.kernels, cfg.model, cfg.field,
                         body["t0_values"], cfg.order, cfg.scheme,
                         quantity=body["quantity"], graph=body.get("graph"))
    lines = ["# t0,value,error"]
    for t0, value, error in scan.rows:
        lines.append(f"{_fmt(t0)},{_fmt(value)},{_fmt(error)}")
    out["scan.csv"] = "\n".join(lines) + "\n"
    fit = [f"quantity: {scan.quantity}",
           f"degenerate: {scan.degenerate}"]
    if scan.exponent is not None:
        fit.append(f"fitted exponent: {_fmt(scan.exponent)}")
        fit.append(f"exponent width: {_fmt(scan.exponent_width)}")
    if scan.differences:
        fit.append("successive differences: "
                   + " ".join(_fmt(d) for d in scan.differences))
    if scan.cauchy_decreasing is not None:
        fit.append(f"differences decreasing: {scan.cauchy_decreasing}")
    out["fit.txt"] = "\n".join(fit) + "\n"
    return scan


def _job_oracle(cfg: RunConfig, out):
    check = cfg.job["check"]
    if check == "mc_correlation":
        est = mc_correlation(cfg.model, cfg.kernels, cfg.field, cfg.t0,
                             cfg.job.get("samples", 100_000), cfg.seed)
        out["oracle.csv"] = ("# mean,std_error,samples,seed\n"
                             f"{_fmt(est.mean)},{_fmt(est.std_error)},"
                             f"{est.samples},{est.seed}\n")
    elif check == "exp_series":
        connected = effective_action_series(cfg.kernels, cfg.model, cfg.field,
                                            cfg.t, cfg.t0, cfg.order,
                                            cfg.scheme, mode=cfg.mode)
        full = partition_function_series(cfg.kernels, cfg.model, cfg.field,
                                         cfg.t, cfg.t0, cfg.order,
                                         cfg.scheme, mode=cfg.mode)
        report = exp_series_check(connected, full, cfg.order)
        lines = ["# order,exp_connected,full,abs_deviation,error_budget"]
        for i, m in enumerate(report.orders):
            lines.append(f"{m},{_fmt(report.expected[i])},"
                         f"{_fmt(report.actual[i])},"
                         f"{_fmt(report.abs_deviation[i])},"
                         f"{_fmt(report.error_budget[i])}")
        lines.append(f"# passed: {report.passed}")
        out["oracle.csv"] = "\n".join(lines) + "\n"
    else:
        report = partition_transform_check(cfg.job.get("n_max", 8),
                                           seed=cfg.seed or 2024)
        out["oracle.csv"] = ("# n_max,sequences,mismatches,seed\n"
                             f"{report.n_max},{report.sequences},"
                             f"{report.mismatches},{report.seed}\n")


def run(cfg: RunConfig, out_dir: str | None = None,
        dry_run: bool = False) -> RunReport:
    """Execute the configured job and write its outputs atomically.

    Returns the manifest of written files with digests; re-running an
    identical configuration reproduces identical digests.
    """
    start = time.monotonic()
    outputs: dict[str, str] = {}
    plot_source = None
    if cfg.job_kind == "enumerate":
        _job_enumerate(cfg, outputs)
    elif cfg.job_kind == "evaluate":
        _job_evaluate(cfg, outputs)
    elif cfg.job_kind == "series":
        plot_source = _job_series(cfg, outputs)
    elif cfg.job_kind == "counterterm":
        _job_counterterm(cfg, outputs)
    elif cfg.job_kind == "scan":
        plot_source = _job_scan(cfg, outputs)
    elif cfg.job_kind == "oracle":
        _job_oracle(cfg, outputs)
    else:
        raise ValueError(f"unknown job kind {cfg.job_kind!r}")

    directory = out_dir or cfg.out_dir
    if dry_run:
        return RunReport(cfg.job_kind, time.monotonic() - start, ())
    os.makedirs(directory, exist_ok=True)
    written = []
    try:
        for name, text in outputs.items():
            path = os.path.join(directory, name)
            _atomic_write(path, text)
            written.append(path)
        if plot_source is not None and cfg.plot_data:
            path = os.path.join(directory, f"{cfg.job_kind}.dat")
            emit_plotdata(plot_source, path)
            written.append(path)
    except BaseException:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        raise
    files = []
    for path in written:
        digest, size = _digest(path)
        files.append((path, digest, size))
    report = RunReport(cfg.job_kind, time.monotonic() - start, tuple(files))
    manifest = {
        "job": cfg.job_kind,
        "wall_time_s": report.wall_time,
        "files": [{"path": os.path.basename(p), "sha256": d, "bytes": b}
                  for p, d, b in files],
    }
    _atomic_write(os.path.join(directory, "manifest.json"),
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="levyflow",
        description="Graph-expansion engine for Levy-driven flows")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a configured job")
    runp.add_argument("config", help="path to the YAML run configuration")
    runp.add_argument("--out", help="output directory override")
    runp.add_argument("--dry-run", action="store_true",
                      help="validate and execute without writing files")
    runp.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(cfg, out_dir=args.out, dry_run=args.dry_run)
    except (QuadratureError, RuntimeError, ValueError) as exc:
        print(f"error: job failed: {exc}", file=sys.stderr)
        return 3
    if args.verbose:
        print(f"job {report.job_kind} finished in {report.wall_time:.2f}s")
        for path, digest, size in report.files:
            print(f"  {path}  sha256={digest[:16]}...  {size}B")
    return 0


if __name__ == "__main__":
    sys.exit(main())
