"""``semiclab <subcommand> --config <path> [--out <dir>]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SUBCOMMANDS, load_config
from .errors import ConfigError


def build_parser():
    p = argparse.ArgumentParser(prog="semiclab", description="Semiclassical mean-field lab")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error in {exc.field}: {exc}", file=sys.stderr)
        return 2
    from .harness import run

    return run(args.subcommand, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
