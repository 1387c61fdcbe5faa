"""Command line for figure rendering.

Usage:
    glfigures render --kind profile --in profile.csv --out profile.png
    glfigures render --kind junction --in junction.csv --summary summary.json --out fig.png

Exit codes: 0 success, 2 schema or configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glfigures")
    sub = parser.add_subparsers(dest="command", required=True)
    rp = sub.add_parser("render", help="render one figure from a CSV")
    rp.add_argument("--kind", required=True, choices=["profile", "junction", "reservoir", "scaling"])
    rp.add_argument("--in", dest="input_csv", required=True, help="input CSV produced by glsteady")
    rp.add_argument("--summary", dest="summary_json", default=None, help="optional summary JSON")
    rp.add_argument("--out", dest="output", required=True, help="output image path")
    rp.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        input_csv=args.input_csv,
        output=args.output,
        summary_json=args.summary_json,
        title=args.title,
    )
    try:
        path = render(spec)
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
