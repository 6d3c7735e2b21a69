"""render_figures <csv_dir> <out_dir> [--only KIND]"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, FigureSpec, RenderError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render evaluation figures from the simulator's CSV files.",
    )
    parser.add_argument("csv_dir", help="directory holding <kind>.csv inputs")
    parser.add_argument("out_dir", help="directory for <kind>.png outputs")
    parser.add_argument("--only", choices=FIGURE_KINDS, default=None,
                        help="render a single figure kind")
    parser.add_argument("--label", default="", help="label appended to titles")
    args = parser.parse_args(argv)

    kinds = [args.only] if args.only else list(FIGURE_KINDS)
    csv_dir = Path(args.csv_dir)
    out_dir = Path(args.out_dir)
    try:
        for kind in kinds:
            out = render(FigureSpec(kind, csv_dir / f"{kind}.csv",
                                    out_dir / f"{kind}.png", args.label))
            print(f"wrote {out}")
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
