"""CLI: `plot throughput --in DIR [--in DIR ...] --out FILE.png` and
`plot timeline --in FILE.csv --out FILE.png`."""

from __future__ import annotations

import argparse
import sys

from .render import SchemaError, render_client_timeline, render_throughput


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plot",
                                     description="Render charts from abrsim CSV metrics")
    sub = parser.add_subparsers(dest="command", required=True)

    tp = sub.add_parser("throughput", help="per-flow throughput time series")
    tp.add_argument("--in", dest="inputs", action="append", required=True,
                    help="run output directory containing throughput.csv (repeatable)")
    tp.add_argument("--out", required=True, help="output image path")

    tl = sub.add_parser("timeline", help="client buffer/level timeline")
    tl.add_argument("--in", dest="input", required=True,
                    help="client_timeline.csv path")
    tl.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "throughput":
            render_throughput(args.inputs, args.out)
        else:
            render_client_timeline(args.input, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
