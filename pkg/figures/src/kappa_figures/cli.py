"""The render_all command-line entry point."""

import argparse
import sys

from .loading import FigureInputError
from .render import FORMATS, render_all


def build_parser():
    parser = argparse.ArgumentParser(
        prog="render_all",
        description="Render the figure set described by a report manifest.")
    parser.add_argument("manifest", help="manifest JSON written by the report pipeline")
    parser.add_argument("--out", required=True, help="directory for the images")
    parser.add_argument("--format", choices=FORMATS, default="png",
                        help="image format (default: %(default)s)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        written = render_all(args.manifest, args.out, args.format)
    except (FigureInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
