"""Command-line entry point.

    pinchisac run        [--config FILE] [--set key=value ...]
    pinchisac sweep      [--config FILE] [--set key=value ...] [--jobs N]
    pinchisac validate
    pinchisac plot-script CSV [-o OUT]

Exit codes: 0 success, 1 configuration/input error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import emit_plot_script, run_rows, spec_from_mapping, write_csv
from .scenario import ConfigError, read_kv_file
from .validation import run_suite

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _load_spec(args, single: bool):
    values = read_kv_file(args.config) if args.config else {}
    values.update(_overrides(args.set))
    spec = spec_from_mapping(values)
    if single:
        # one experiment: first entry of every list
        for attr in ("schemes", "power_sweep_dbm", "rmin_list", "t_list", "seeds"):
            setattr(spec, attr, getattr(spec, attr)[:1])
    return spec


def _experiment(args, single: bool) -> int:
    try:
        spec = _load_spec(args, single)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.output or spec.output_path
    try:
        rows = run_rows(spec, jobs=getattr(args, "jobs", 1), timing=args.timing)
    except ValueError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = write_csv(rows, out)
    if out is None:
        sys.stdout.write(text)
    return EXIT_OK


def _validate(args) -> int:
    results = run_suite(echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VALIDATION if failed else EXIT_OK


def _plot(args) -> int:
    try:
        text = emit_plot_script(args.csv)
    except ValueError as exc:
        print(f"plot-script: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pinchisac",
                                 description="Pinching-antenna ISAC outage simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in (("run", "single experiment (first entry of every list)"),
                      ("sweep", "full sweep over schemes, T, R_min, powers and seeds")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("-o", "--output", help="CSV path (default: output_csv or stdout)")
        sp.add_argument("--timing", action="store_true",
                        help="fill the wall_ms column (makes output non-reproducible)")
        if name == "sweep":
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub.add_parser("validate", help="run the self-check suite")
    sp = sub.add_parser("plot-script", help="print a matplotlib script for a CSV")
    sp.add_argument("csv")
    sp.add_argument("-o", "--output")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "run":
        return _experiment(args, single=True)
    if args.command == "sweep":
        return _experiment(args, single=False)
    if args.command == "validate":
        return _validate(args)
    return _plot(args)


if __name__ == "__main__":
    sys.exit(main())
