"""Dataset generation command."""

from __future__ import annotations

import argparse
from pathlib import Path

from core.config import ScenarioConfig, add_config_arguments
from core.dataset import generate_dataset, split_dataset, write_dataset

from . import emit, settings_from


class DatasetCommands:
    title = "Datasets"

    def register(self, subparsers: argparse._SubParsersAction) -> None:
        description = "Generate a file of mobility channel sequences"
        parser = subparsers.add_parser("generate", help=description, description=description)
        parser.add_argument("--output", required=True, help="dataset file to write")
        parser.add_argument("--samples", type=int, help="number of sequences (default: train+val+test sizes)")
        parser.add_argument("--seed", type=int, help="dataset seed (default: rng_seed)")
        parser.add_argument(
            "--split",
            action="store_true",
            help="write <output>_train/_val/_test files using the configured split",
        )
        add_config_arguments(parser, ScenarioConfig)
        parser.set_defaults(handler=self.generate)

    def generate(self, args: argparse.Namespace) -> int:
        settings = settings_from(args)
        tc = settings.train
        sizes = (tc.n_train, tc.n_val, tc.n_test)
        n_samples = args.samples if args.samples is not None else sum(sizes)
        dataset = generate_dataset(settings.scenario, n_samples, args.seed)
        output = Path(args.output)
        written = {}
        if args.split:
            for name, part in split_dataset(dataset, sizes).items():
                path = output.with_name(f"{output.stem}_{name}{output.suffix}")
                write_dataset(path, part)
                written[name] = {"path": str(path), "samples": len(part)}
        else:
            write_dataset(output, dataset)
            written["all"] = {"path": str(output), "samples": len(dataset)}
        emit({"files": written, "dims": dict(zip(("n_subcarriers", "n_tx", "window_len", "n_paths"), dataset.dims))})
        return 0
