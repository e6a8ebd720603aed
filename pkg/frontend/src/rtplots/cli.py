"""Command line: ``rtplots plot --spec figure.json`` (or .ini/.cfg)."""

import argparse
import sys

from .render import render
from .spec import load_spec


def main(argv=None):
    parser = argparse.ArgumentParser(prog="rtplots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot", help="render one figure from a spec file")
    p_plot.add_argument("--spec", required=True, help="path to a .json or .ini spec")
    args = parser.parse_args(argv)
    try:
        result = render(load_spec(args.spec))
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.path} ({result.caption})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
