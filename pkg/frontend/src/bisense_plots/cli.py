"""Command-line figure renderer for sweep CSVs."""

import argparse
import sys
from pathlib import Path

from bisense_plots.render import KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bisense-plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one figure from a sweep CSV")
    p.add_argument("--csv", required=True, help="input CSV from `bisense sweep`")
    p.add_argument("--kind", required=True, choices=sorted(KINDS))
    p.add_argument("--group", default="method", help="CSV column that labels the curves")
    p.add_argument("--out", required=True, help="output image path (.png or .svg)")
    p.add_argument(
        "--logy",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="log-scale y axis (default: on for RMSE kinds)",
    )

    args = parser.parse_args(argv)
    spec = FigureSpec(
        csv_path=Path(args.csv),
        kind=args.kind,
        group=args.group,
        out_path=Path(args.out),
        logy=args.logy,
    )
    try:
        out = render(spec)
    except (SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
