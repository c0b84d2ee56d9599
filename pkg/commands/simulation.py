"""End-to-end simulation command."""

from __future__ import annotations

import argparse

from core.allocation import METHODS
from core.config import LinkSimConfig, ScenarioConfig, add_config_arguments
from core.scenario import ESTIMATORS, PipelineSpec, run_scenario

from . import emit, settings_from


class SimulationCommands:
    title = "Simulation"

    def register(self, subparsers: argparse._SubParsersAction) -> None:
        description = "Sweep feedback budgets and SNRs and write metrics.csv plus manifest.json"
        parser = subparsers.add_parser("simulate", help=description, description=description)
        parser.add_argument("--estimator", choices=ESTIMATORS, default="oracle")
        parser.add_argument("--checkpoint", help="checkpoint for the trained estimator")
        parser.add_argument("--method", choices=METHODS, default="closed", help="allocation policy")
        parser.add_argument("--total-bits", type=int, nargs="+", default=[32, 64, 96, 128], help="bits per path")
        parser.add_argument("--seeds", type=int, nargs="+", default=[0], help="one dataset per seed")
        parser.add_argument("--samples", type=int, default=32, help="sequences per seed")
        parser.add_argument(
            "--observation-noise",
            action="store_true",
            help="add AWGN at each SNR to the history seen by the estimator",
        )
        parser.add_argument("--output", required=True, help="output directory")
        add_config_arguments(parser, ScenarioConfig, LinkSimConfig)
        parser.set_defaults(handler=self.simulate)

    def simulate(self, args: argparse.Namespace) -> int:
        settings = settings_from(args)
        spec = PipelineSpec(
            estimator=args.estimator,
            checkpoint=args.checkpoint,
            allocation_method=args.method,
            total_bits=tuple(args.total_bits),
            n_samples=args.samples,
            observation_noise=args.observation_noise,
        )
        frame = run_scenario(settings.scenario, spec, args.seeds, args.output, settings.link)
        summary = frame.groupby(["total_bits", "snr_db"], as_index=False)[["nmse", "ber"]].mean()
        emit({"output": args.output, "rows": len(frame), "mean_by_budget": summary.to_dict(orient="records")})
        return 0
