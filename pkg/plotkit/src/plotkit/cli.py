"""Command line: plotkit <figure-kind> --in CSV [--report JSON] --out PNG."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, MissingColumn, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="Render formation-control figures "
                                                 "from trajectory CSV files")
    parser.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument("--in", dest="traj_csv", required=True, help="trajectory CSV")
    parser.add_argument("--report", default=None,
                        help="run manifest JSON (supplies the target separation)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--pair", type=int, default=1,
                        help="1-based consecutive pair index for shape figures")
    parser.add_argument("--times", default=None,
                        help="comma-separated snapshot times for chain_snapshots")
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    times = []
    if args.times:
        try:
            times = [float(v) for v in args.times.split(",") if v.strip()]
        except ValueError:
            print(f"--times must be comma-separated numbers, got {args.times!r}",
                  file=sys.stderr)
            return 1
    spec = FigureSpec(kind=args.kind, traj_csv=args.traj_csv, out_path=args.out,
                      report_json=args.report, pair=args.pair,
                      snapshot_times=times, dpi=args.dpi)
    try:
        render(spec)
    except MissingColumn as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
