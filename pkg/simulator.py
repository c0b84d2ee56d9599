"""Entry point for the parametric CSI feedback simulator.

This script builds the command-line parser from the command groups in
``commands``, configures logging and dispatches to the selected handler.
Settings come from defaults, an optional dotenv-style ``--config`` file
(or ``CSI_SIM_CONFIG``) and per-field flags, in that order of precedence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

# When running as a script, adjust sys.path so that the 'core' and 'commands'
# packages can be imported without relative import errors.
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core import config as cfg  # type: ignore
from core.util import version_string  # type: ignore
from commands.dataset import DatasetCommands  # type: ignore
from commands.feedback import FeedbackCommands  # type: ignore
from commands.simulation import SimulationCommands  # type: ignore
from commands.training import TrainingCommands  # type: ignore
from commands.verify import VerifyCommands  # type: ignore

GROUPS = (FeedbackCommands(), DatasetCommands(), TrainingCommands(), SimulationCommands(), VerifyCommands())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simulator", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="dotenv-style config file (default: $CSI_SIM_CONFIG)")
    parser.add_argument("--log-level", default=cfg.LOG_LEVEL, help="logging level name")
    parser.add_argument("--version", action="version", version=version_string())
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    description = "List all available commands"
    commands_parser = subparsers.add_parser("commands", help=description, description=description)
    commands_parser.set_defaults(handler=lambda args: list_commands(subparsers))
    for group in GROUPS:
        group.register(subparsers)
    return parser


def list_commands(subparsers: argparse._SubParsersAction) -> int:
    """Print a grouped list of all registered commands."""
    helps = {action.dest: action.help for action in subparsers._choices_actions}

    groups = {"General": ["commands"]}
    for group in GROUPS:
        names = [name for name, parser in subparsers.choices.items() if _owner(parser) is group]
        groups[group.title] = names

    lines: list[str] = []
    used: set[str] = set()
    for title, names in groups.items():
        entries = []
        for name in names:
            if name in helps:
                entries.append(f"  {name} - {helps[name]}")
                used.add(name)
        if entries:
            lines.append(f"{title}:")
            lines.extend(entries)
            lines.append("")

    leftovers = [n for n in helps if n not in used]
    if leftovers:
        lines.append("Other:")
        for name in sorted(leftovers):
            lines.append(f"  {name} - {helps[name]}")

    print("\n".join(lines).strip())
    return 0


def _owner(parser: argparse.ArgumentParser) -> object | None:
    handler = parser.get_default("handler")
    return getattr(handler, "__self__", None)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    try:
        return args.handler(args)
    except ValueError as e:
        # Config, payload, dataset and checkpoint errors all derive from ValueError.
        logging.error("%s", e)
        return 2
    except OSError as e:
        logging.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
