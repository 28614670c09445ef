"""Standalone figure renderer: plot <kind> --in <csv> [--in2 <csv>] --out <file>."""

from __future__ import annotations

import argparse
import sys

from .figures import RENDERERS, FigureSpec, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wedgewalk-plot",
        description="Render wedgewalk CSV outputs to figure files.")
    parser.add_argument("kind", choices=sorted(RENDERERS))
    parser.add_argument("--in", dest="input", required=True,
                        help="input CSV (sweep, records, or drift table)")
    parser.add_argument("--in2", dest="input2", default=None,
                        help="optional second input CSV (survival overlays)")
    parser.add_argument("--out", required=True, help="output .png or .svg")
    parser.add_argument("--no-threshold-overlay", action="store_true",
                        help="phase diagram without the critical curve")
    parser.add_argument("--mark-extrema", action="store_true",
                        help="mark the threshold extrema on the overlay")
    args = parser.parse_args(argv)

    inputs = [args.input] + ([args.input2] if args.input2 else [])
    spec = FigureSpec(kind=args.kind, inputs=inputs, output=args.out,
                      overlay_threshold=not args.no_threshold_overlay,
                      mark_extrema=args.mark_extrema)
    try:
        render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
