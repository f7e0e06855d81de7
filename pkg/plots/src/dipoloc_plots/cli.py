"""Command-line entry point: ``plots render --kind <kind> --in <paths> --out
<file> --format <png|svg>``."""

import argparse
import sys

from dipoloc_plots.io import SchemaError
from dipoloc_plots.render import FIGURE_KINDS, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from dipoloc CSV/JSON outputs",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    r = commands.add_parser("render", help="render one figure")
    r.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    r.add_argument(
        "--in",
        dest="inputs",
        required=True,
        nargs="+",
        help="input artifact path(s)",
    )
    r.add_argument("--out", required=True, help="output image path")
    r.add_argument("--format", default="png", choices=["png", "svg"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.kind, args.inputs, args.out, args.format)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
