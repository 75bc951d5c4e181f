"""Command-line entry point.

    optbench <experiment> [--config FILE] [--n N] [--trials T] [--seed S]
             [--C C] [--alpha A] [--out-dir DIR] [--preset desk|paper]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .errors import ConfigError, NumericalFailure
from .experiments import COMMANDS, EXPERIMENTS, build_config, parse_config_file


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optbench",
        description="Desk-scale benchmarks for momentum with stochastic parameters.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--C", type=float, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--preset", choices=("desk", "paper"), default=None)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else None
        cfg = build_config(
            args.experiment,
            file_values,
            n=args.n,
            trials=args.trials,
            seed=args.seed,
            C=args.C,
            alpha=args.alpha,
            out_dir=args.out_dir,
            preset=args.preset,
        )
        path = COMMANDS[cfg.experiment](cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
