"""Command-line interface: one module per subcommand under ``src.cli.commands``."""

import argparse

from src.cli.commands import (
    bpb,
    c0check,
    cantor,
    extend,
    freenorm,
    norm,
    run,
    sa_density,
    seminorm,
    ucx,
)

COMMANDS = [norm, extend, freenorm, bpb, ucx, cantor, sa_density, seminorm, c0check, run]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipkit",
        description="Norm attainment experiments for Lipschitz functionals on finite metric spaces.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser
