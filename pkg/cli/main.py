"""
VPNet command line.

Usage:
    python -m cli [-v] <subcommand> [options]

Subcommands:
    synth       render a synthetic stereo + LiDAR dataset
    train       train a model, write a checkpoint and loss.csv
    eval        per-sample metrics CSV (+ point-count ladder)
    infer       depth map (PFM) for one stereo pair
    quantize    embedding-error table per range band
    gradcheck   finite-difference check of every backward
    ablate      train + evaluate a list of mode triples over seeds

Exit codes: 0 success, 1 usage error, 2 data / format error, 3 check failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from cli import ablate, evaluate, gradcheck, infer, quantize, synth, train
from cli.constants import EXIT_DATA, EXIT_USAGE, VPNET_LOG_LEVEL
from errors import (
    CalibrationError,
    ConfigError,
    DatasetError,
    FormatError,
    SamplingError,
    UnregisteredOperatorError,
)

logger = logging.getLogger(__name__)

SUBCOMMANDS = (synth, train, evaluate, infer, quantize, gradcheck, ablate)


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> CommandParser:
    parser = CommandParser(
        prog="vpnet",
        description="Stereo-LiDAR volumetric propagation network.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=CommandParser)
    for module in SUBCOMMANDS:
        module.register(sub)
    return parser


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, VPNET_LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s  %(levelname)-8s  %(name)s  %(message)s",
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        return args.handler(args)
    except (ConfigError, UnregisteredOperatorError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (FormatError, DatasetError, CalibrationError, SamplingError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
