"""Batch entry point: render one figure per invocation."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="opo-smoothing-figures",
        description="Render opo-smoothing CSV/JSON results to PNG or SVG.",
    )
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--sidecar", default=None,
                        help="JSON sidecar (default: CSV path with .json)")
    parser.add_argument("--out", required=True, help="output image path (.png/.svg)")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    path = render(
        FigureSpec(
            kind=args.kind,
            csv_path=args.csv,
            sidecar_path=args.sidecar,
            output_path=args.out,
            dpi=args.dpi,
            title=args.title,
        )
    )
    print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
