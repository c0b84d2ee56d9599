"""Training and evaluation of the attention encoder/decoder pair."""

from __future__ import annotations

import argparse
import dataclasses
import logging
from pathlib import Path

import pandas as pd

from core.checkpoint import load_checkpoint, save_checkpoint
from core.config import ModelConfig, ScenarioConfig, TrainConfig, add_config_arguments
from core.dataset import read_dataset
from core.estimator import build_models
from core.training import attention_frame, evaluate, train

from . import emit, settings_from


class TrainingCommands:
    title = "Estimator"

    def register(self, subparsers: argparse._SubParsersAction) -> None:
        description = "Train the encoder and decoder on a dataset file"
        parser = subparsers.add_parser("train", help=description, description=description)
        parser.add_argument("--dataset", required=True, help="training dataset file")
        parser.add_argument("--checkpoint", required=True, help="checkpoint file to write")
        parser.add_argument("--loss-csv", help="write per-epoch losses to this CSV")
        add_config_arguments(parser, ScenarioConfig, ModelConfig, TrainConfig)
        parser.set_defaults(handler=self.train)

        description = "Score a checkpoint on a dataset file"
        parser = subparsers.add_parser("eval", help=description, description=description)
        parser.add_argument("--checkpoint", required=True, help="checkpoint file to load")
        parser.add_argument("--dataset", required=True, help="evaluation dataset file")
        parser.add_argument("--attention-csv", help="write encoder attention maps to this CSV")
        parser.set_defaults(handler=self.evaluate)

    def train(self, args: argparse.Namespace) -> int:
        settings = settings_from(args)
        dataset = read_dataset(args.dataset)
        n_f, n_t, w, n_paths = dataset.dims
        # Array dimensions always come from the file.
        scenario = dataclasses.replace(
            settings.scenario, n_subcarriers=n_f, n_tx=n_t, window_len=w, n_paths=n_paths
        )
        encoder, decoder = build_models(scenario, settings.model, settings.train.seed)
        result = train(dataset, encoder, decoder, scenario, settings.train)
        save_checkpoint(args.checkpoint, encoder, decoder, scenario, settings.model, result.allocation)
        if args.loss_csv:
            frame = pd.DataFrame(
                {
                    "epoch": range(1, len(result.encoder_loss) + 1),
                    "encoder_loss": result.encoder_loss,
                    "decoder_loss": result.decoder_loss,
                }
            )
            frame.to_csv(args.loss_csv, index=False, float_format="%.10g")
            logging.info("Wrote losses to %s", args.loss_csv)
        emit(
            {
                "checkpoint": args.checkpoint,
                "feedback_bits": result.allocation.as_tuple(),
                "final_encoder_loss": result.encoder_loss[-1],
                "final_decoder_loss": result.decoder_loss[-1],
            }
        )
        return 0

    def evaluate(self, args: argparse.Namespace) -> int:
        encoder, decoder, scenario, _, allocation = load_checkpoint(args.checkpoint)
        dataset = read_dataset(args.dataset, scenario)
        report, maps = evaluate(dataset, encoder, decoder, scenario, allocation)
        if args.attention_csv:
            attention_frame(maps).to_csv(Path(args.attention_csv), index=False, float_format="%.10g")
            logging.info("Wrote attention maps to %s", args.attention_csv)
        emit(report)
        return 0
