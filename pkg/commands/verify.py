"""Verification command running the analytic cross-checks."""

from __future__ import annotations

import argparse
import logging

from core.config import ScenarioConfig, add_config_arguments
from core.verification import REPORTS, desk_config, isolation_config, run_report

from . import emit, scenario_overrides


class VerifyCommands:
    title = "Verification"

    def register(self, subparsers: argparse._SubParsersAction) -> None:
        description = "Check Jacobians, distortion terms and bit allocation against oracles"
        parser = subparsers.add_parser("verify", help=description, description=description)
        parser.add_argument("--what", choices=REPORTS, required=True, help="which report to run")
        parser.add_argument("--samples", type=int, help="instances or Monte Carlo samples")
        parser.add_argument("--seed", type=int, default=0)
        add_config_arguments(parser, ScenarioConfig)
        parser.set_defaults(handler=self.verify)

    def verify(self, args: argparse.Namespace) -> int:
        overrides = scenario_overrides(args)
        cfg = isolation_config(**overrides) if args.what == "isolation" else desk_config(**overrides)
        report = run_report(args.what, cfg, samples=args.samples, seed=args.seed)
        logging.info("Report %s passed: %s", args.what, report.get("passed"))
        emit(report)
        return 0 if report.get("passed", True) else 3
