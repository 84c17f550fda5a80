"""Command-line entry point: render one figure from a run manifest."""

from __future__ import annotations

import argparse
import sys

from .loaders import LoaderError
from .render import KINDS, FigureSpec, RenderError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kickshift-figures",
        description="Render a figure from a kickshift run directory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure kind from a manifest")
    p.add_argument("--manifest", required=True, help="path to a run manifest.json")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--cmap", default="viridis")
    p.add_argument("--log", action="store_true", help="logarithmic color/density scale")
    p.add_argument("--format", dest="fmt", default="png", choices=("png", "svg"))

    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            manifest=args.manifest,
            kind=args.kind,
            out=args.out,
            colormap=args.cmap,
            log_scale=args.log,
            fmt=args.fmt,
        )
        path = render(spec)
    except (LoaderError, RenderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
