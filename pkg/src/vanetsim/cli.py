"""Command line front end.

Subcommands: `run` executes one scenario and writes its artifacts,
`compare` runs both protocols on one scenario and prints the verdict
table, `trace-parse` validates a mobility trace file. Exit codes:
0 success, 1 validation problem, 2 I/O problem.
"""

import argparse
import dataclasses
import os
import sys

from .metrics import TraceFormatError, parse_mobility_trace
from .scenario import (
    BUILTIN_SCENARIOS,
    ConfigError,
    builtin_scenario,
    compare,
    format_comparison,
    format_report,
    load_config,
    run,
)


def _add_common_flags(parser):
    parser.add_argument("--scenario", required=True,
                        help="builtin name (%s) or path to a scenario file"
                        % ", ".join(BUILTIN_SCENARIOS))
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    parser.add_argument("--duration", type=float, default=None,
                        help="override the simulated duration in seconds")
    parser.add_argument("--out", default="out",
                        help="output directory (default: out)")
    parser.add_argument("--range", type=float, default=None, dest="radio_range",
                        help="override the radio range in meters")
    parser.add_argument("--window", type=float, default=1.0,
                        help="metric averaging window in seconds (default: 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vanetsim",
        description="Deterministic ad-hoc network simulator comparing "
                    "on-demand and table-driven routing.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write artifacts")
    _add_common_flags(run_p)
    run_p.add_argument("--protocol", choices=("aodv", "dsdv"), default=None,
                       help="routing protocol (required for builtin scenarios)")

    cmp_p = sub.add_parser("compare",
                           help="run both protocols on one scenario")
    _add_common_flags(cmp_p)

    tp = sub.add_parser("trace-parse", help="validate a mobility trace file")
    tp.add_argument("trace_file", help="path to a trace file")
    return parser


def _resolve_config(args, protocol):
    if args.scenario in BUILTIN_SCENARIOS:
        if protocol is None:
            raise ConfigError(
                "builtin scenarios need --protocol aodv or dsdv")
        config = builtin_scenario(args.scenario, protocol)
    else:
        if not os.path.exists(args.scenario):
            raise ConfigError(
                f"scenario {args.scenario!r} is neither a builtin "
                f"({', '.join(BUILTIN_SCENARIOS)}) nor a file")
        with open(args.scenario) as fh:
            config = load_config(fh.read())
        if protocol is not None:
            config = dataclasses.replace(config, protocol=protocol)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.duration is not None:
        config = dataclasses.replace(config, duration=args.duration)
    if args.radio_range is not None:
        config = dataclasses.replace(
            config,
            radio=dataclasses.replace(config.radio,
                                      radio_range=args.radio_range))
    return config


def _cmd_run(args) -> int:
    protocol = args.protocol.upper() if args.protocol else None
    config = _resolve_config(args, protocol)
    report = run(config, out_dir=args.out, window=args.window)
    sys.stdout.write(format_report(report))
    return 0


def _cmd_compare(args) -> int:
    reports = []
    for protocol in ("AODV", "DSDV"):
        config = _resolve_config(args, protocol)
        out_dir = os.path.join(args.out, protocol.lower())
        reports.append(run(config, out_dir=out_dir, window=args.window))
    result = compare(reports[0], reports[1])
    text = format_comparison(result)
    with open(os.path.join(args.out, "comparison.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def _cmd_trace_parse(args) -> int:
    with open(args.trace_file) as fh:
        records, skipped = parse_mobility_trace(fh.read())
    sys.stdout.write(
        f"{args.trace_file}: {len(records)} motion records, "
        f"{skipped} other lines\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "compare": _cmd_compare,
        "trace-parse": _cmd_trace_parse,
    }[args.command]
    try:
        return handler(args)
    except (ConfigError, TraceFormatError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
