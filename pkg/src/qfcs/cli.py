"""Command-line entry point: ``qfcs {distribution,filter,cumulants,charfunc}``.

Exit codes: 0 success, 1 configuration error, 2 runtime error (including a
filter that annihilates the state).
"""

from __future__ import annotations

import argparse
import logging
import sys

from qfcs import __version__
from qfcs.config import ConfigError, ExperimentConfig, load_config
from qfcs.experiments import EXPERIMENTS

log = logging.getLogger("qfcs")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config file (defaults: reference setting)")
    common.add_argument("--seed", type=int, help="override [estimation] seed")
    common.add_argument("--out", metavar="PATH", help="output CSV path ('-' for stdout)")
    common.add_argument("--mode", choices=("exact", "shots"), help="override [estimation] mode")
    common.add_argument("--shots", type=int, help="override [estimation] shots")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qfcs", description="Full-counting statistics on a simulated quantum computer.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("distribution", parents=[common], help="DFT reconstruction of P(n) vs grid size")
    sub.add_parser("filter", parents=[common], help="reconstruction after removing number sectors")
    sub.add_parser("cumulants", parents=[common], help="finite-difference cumulants vs step and Richardson rounds")
    sub.add_parser("charfunc", parents=[common], help="raw characteristic-function samples")
    return parser


def resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        key: getattr(args, attr)
        for key, attr in (("seed", "seed"), ("mode", "mode"), ("shots", "shots"), ("path", "out"))
        if getattr(args, attr) is not None
    }
    return config.replace(**overrides) if overrides else config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"qfcs: config error: {exc}", file=sys.stderr)
        return 1
    try:
        log.info("running %s (L=%d, mode=%s)", args.command, config.L, config.mode)
        text = EXPERIMENTS[args.command](config)
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"qfcs: error: {exc}", file=sys.stderr)
        return 2
    if config.path == "-":
        sys.stdout.write(text)
    else:
        with open(config.path, "w", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", config.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
