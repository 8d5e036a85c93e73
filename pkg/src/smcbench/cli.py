"""Command line harness.

Subcommands:
  sweep        run a parameter sweep and persist metrics (CSV) and a report
  report       fit scaling laws over an existing results CSV
  kernel-bench compare the compiled and pure arithmetic kernels

Exit codes: 0 on success, 2 on configuration errors, 3 when at least one
sweep cell hard-failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, sweep
from .kernel_bench import run_kernel_bench


def _sweep_parser(subparsers):
    p = subparsers.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--peers", type=int, nargs="+", help="party counts, e.g. 3 5 7")
    p.add_argument("--latency-ms", type=float, nargs="+", dest="latency_ms",
                   help="extra round-trip delays in ms")
    p.add_argument("--rate-mbit", type=float, nargs="+", dest="rate_mbit",
                   help="link rates in Mbit/s")
    p.add_argument("--loss", type=float, nargs="+", help="packet loss probabilities")
    p.add_argument("--pf", type=int, nargs="+", help="parallelization factors")
    p.add_argument("--sessions", type=int, help="protocol executions per repetition")
    p.add_argument("--reps", type=int, dest="repetitions", help="repetitions per cell")
    p.add_argument("--seed", type=int, help="base seed of the sweep")
    p.add_argument("--mode", choices=sweep.MODES, help="simulate or sockets")
    p.add_argument("--protocol",
                   help="sum, product, or the path of a textual plan file")
    p.add_argument("--traces", dest="traces_dir", help="directory of GPS trace CSVs")
    p.add_argument("--out", dest="out_csv", help="results CSV path")
    p.add_argument("--report", dest="report_json", help="fit report JSON path")
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--modulus", dest="modulus_decimal",
                   help="prime modulus as a decimal string")
    p.add_argument("--reference-axes", action="store_true",
                   help="print list the reference one-at-a-time axis values and exit")
    return p


def _load_sweep_config(args):
    settings = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_settings = json.load(fh)
        unknown = set(file_settings) - {
            "peers", "latency_ms", "rate_mbit", "loss", "pf", "sessions",
            "repetitions", "seed", "mode", "protocol", "traces_dir",
            "out_csv", "report_json", "modulus_decimal", "executor_slots",
        }
        if unknown:
            raise sweep.ConfigError(f"unknown config keys: {sorted(unknown)}")
        settings.update(file_settings)
    for key in (
        "peers", "latency_ms", "rate_mbit", "loss", "pf", "sessions",
        "repetitions", "seed", "mode", "protocol", "traces_dir",
        "out_csv", "report_json", "modulus_decimal",
    ):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    protocol = settings.get("protocol")
    if protocol and protocol not in sweep.PROTOCOLS:
        # a textual plan file: close, then add|mul, then open
        from .programs import plan_kind

        with open(protocol, encoding="utf-8") as fh:
            settings["protocol"] = plan_kind(fh.read())
    return sweep.SweepConfig(**settings)


def _cmd_sweep(args):
    if args.reference_axes:
        print(json.dumps(sweep.REFERENCE_AXES, indent=2))
        return 0
    try:
        cfg = _load_sweep_config(args)
        rows, outcomes, hard_failures = sweep.run_sweep(cfg)
    except (sweep.ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    print(f"{len(rows)} repetition rows written to {cfg.out_csv}")
    if outcomes:
        last = outcomes[-1]
        print(
            f"last cell running sum: {last.running_sum_cm} cm over "
            f"{last.submissions} submissions (average {last.average_m:.2f} m)"
        )
    if cfg.report_json and rows:
        report = sweep.emit_report(rows)
        with open(cfg.report_json, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
        print(sweep.report_text(report))
    for failure in hard_failures:
        print(f"cell hard-failed: {failure}", file=sys.stderr)
    return 3 if hard_failures else 0


def _cmd_report(args):
    try:
        rows = analysis.read_metrics_csv(args.results)
        report = sweep.emit_report(rows)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    print(sweep.report_text(report))
    return 0


def _cmd_kernel_bench(args):
    print(run_kernel_bench(parties=args.peers, iterations=args.iterations))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="smcbench", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    _sweep_parser(subparsers)

    p_report = subparsers.add_parser("report", help="fit laws over a results CSV")
    p_report.add_argument("results", help="results CSV produced by sweep")
    p_report.add_argument("--out", help="report JSON path")

    p_bench = subparsers.add_parser(
        "kernel-bench", help="compare compiled and pure arithmetic kernels"
    )
    p_bench.add_argument("--peers", type=int, default=9)
    p_bench.add_argument("--iterations", type=int, default=2000)

    args = parser.parse_args(argv)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "report":
        return _cmd_report(args)
    return _cmd_kernel_bench(args)


if __name__ == "__main__":
    sys.exit(main())
