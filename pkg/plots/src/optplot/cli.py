"""Command-line entry point.

    optplot <kind> --in <csv...> --out <img> [--title ...] [--log-x] [--log-y/--linear-y]
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .figures import KINDS, FigureSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optplot", description="Render benchmark CSVs into figures.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, help="input CSV file(s)")
    parser.add_argument("--out", dest="output", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    parser.add_argument("--log-x", action="store_true")
    log_y = parser.add_mutually_exclusive_group()
    log_y.add_argument("--log-y", dest="log_y", action="store_true", default=None)
    log_y.add_argument("--linear-y", dest="log_y", action="store_false")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(
        inputs=args.inputs,
        kind=args.kind,
        output=args.output,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
        log_x=args.log_x,
        log_y=args.log_y,
    )
    try:
        out = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
