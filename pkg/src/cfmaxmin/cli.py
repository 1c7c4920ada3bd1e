"""Command-line front end for the experiment harness.

Exit codes: 0 on success, 2 on config errors, 3 when a solve fails to
converge under run.strict = true.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    NonConvergenceError,
    apply_overrides,
    build_experiment,
    load_config_file,
    run_bench,
    run_cdf,
    run_sweep,
    run_trace,
)

_RUNNERS = {
    "trace": run_trace,
    "cdf": run_cdf,
    "sweep": run_sweep,
    "bench": run_bench,
}

_HELP = {
    "trace": "per-outer-iteration min-SE for both power solvers",
    "cdf": "converged per-user spectral efficiencies across realizations",
    "sweep": "mean min-SE over a grid of (M, L) configurations",
    "bench": "wall-time comparison of the APG and oracle power solvers",
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfmaxmin",
        description="Max-min fair uplink simulator for cell-free massive MIMO.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, help_text in _HELP.items():
        sp = sub.add_parser(kind, help=help_text)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument(
            "overrides",
            nargs="*",
            metavar="KEY=VALUE",
            help="dotted-key overrides, e.g. sim.M=100",
        )
    args = parser.parse_args(argv)

    try:
        raw = load_config_file(args.config) if args.config else {}
        apply_overrides(raw, args.overrides)
        exp = build_experiment(raw, kind=args.kind, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        written = _RUNNERS[args.kind](exp)
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3

    paths = written if isinstance(written, (list, tuple)) else [written]
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
