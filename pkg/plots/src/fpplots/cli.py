"""Command-line front end; flags mirror the PlotSpec fields."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import PlotSpec, SchemaError, render_trajectories


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fpplots", description="Render per-state value trajectories from run CSVs"
    )
    p.add_argument("--csv", type=Path, action="append", required=True,
                   help="run CSV; may repeat to overlay several runs")
    p.add_argument("--equilibrium", type=Path, required=True,
                   help="equilibrium JSON from the same experiment")
    p.add_argument("--out", type=Path, required=True, help="image file to write")
    p.add_argument("--states", type=int, nargs="*", default=None,
                   help="subset of states to plot; default: all in the CSV")
    p.add_argument("--ylim", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        csv_paths=tuple(args.csv),
        equilibrium_path=args.equilibrium,
        out_path=args.out,
        states=None if args.states is None else tuple(args.states),
        y_limits=None if args.ylim is None else (args.ylim[0], args.ylim[1]),
    )
    try:
        out = render_trajectories(spec)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
