"""Command groups for the simulator CLI.

Each group class registers its subcommands on an argparse subparsers action
and handles them. Handlers return a process exit code.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Any

from core.config import ScenarioConfig, Settings, coerce_fields, config_overrides, load_settings, read_config_file
from core.util import dumps


def settings_from(args: argparse.Namespace) -> Settings:
    """Defaults, then ``--config`` file, then flags."""
    return load_settings(getattr(args, "config", None), config_overrides(args))


def scenario_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Scenario fields set explicitly by the config file or flags, already typed."""
    names = {f.name for f in dataclasses.fields(ScenarioConfig)}
    raw: dict[str, Any] = {}
    if getattr(args, "config", None):
        raw.update({k: v for k, v in read_config_file(args.config).items() if k in names})
    raw.update({k: v for k, v in config_overrides(args).items() if k in names})
    return coerce_fields(ScenarioConfig, raw)


def emit(report: Any) -> None:
    """Write a JSON result to stdout."""
    sys.stdout.write(dumps(report, indent=2) + "\n")
