"""Command-line entry point: result CSV in, figure image out."""

import argparse
import sys

from .render import KINDS, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="figures",
        description="Render heatmaps and line plots from experiment result CSVs")
    ap.add_argument("--csv", required=True, help="results CSV path")
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--x", required=True, help="x-axis column")
    ap.add_argument("--y", default=None, help="y-axis column (heatmap)")
    ap.add_argument("--value", required=True, help="metric column to plot")
    ap.add_argument("--facet", default=None, help="one panel/series per value")
    ap.add_argument("--out", required=True, help="output image path")
    args = ap.parse_args(argv)

    spec_kwargs = dict(csv_path=args.csv, kind=args.kind, x=args.x, y=args.y,
                       value=args.value, facet=args.facet, out_path=args.out)
    try:
        render(FigureSpec(**spec_kwargs))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
