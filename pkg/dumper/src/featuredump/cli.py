"""Command line: featuredump dump --backbone NAME --images DIR --out PATH
--format {fmx,csv} [--no-pool] [--weights imagenet|random] [--seed N]

Exit codes: 0 ok, 1 usage error, 2 setup/data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backbones import FAMILY
from .dump import FORMATS, DumpConfig, dump_features
from .dump_errors import SetupError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="featuredump", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dump", help="extract features from an image folder")
    p.add_argument("--backbone", required=True, choices=sorted(FAMILY))
    p.add_argument("--images", required=True, type=Path, help="image folder; class subdirectories become labels")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--format", choices=FORMATS, default="fmx")
    p.add_argument("--no-pool", action="store_true",
                   help="emit the raw spatial tensor (flattened height x width x channels) instead of pooled features")
    p.add_argument("--weights", choices=("imagenet", "random"), default="imagenet",
                   help="'random' builds seeded frozen random weights (offline/integration use)")
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = None
    try:
        cfg = DumpConfig(
            backbone=args.backbone,
            images=args.images,
            out=args.out,
            fmt=args.format,
            pooled=not args.no_pool,
            weights=args.weights,
            seed=args.seed,
        )
        summary = dump_features(cfg)
    except (SetupError, OSError) as exc:
        print(f"featuredump: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary.as_dict()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
