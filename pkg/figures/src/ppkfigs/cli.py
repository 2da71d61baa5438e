"""ppk-fig: render one figure kind from one ppk CSV file."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, render
from .tables import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ppk-fig", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="in_path", required=True)
    parser.add_argument("--out", dest="out_path", required=True)
    args = parser.parse_args(argv)
    try:
        render(args.kind, args.in_path, args.out_path)
    except (SchemaError, OSError) as exc:
        print(f"ppk-fig: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
