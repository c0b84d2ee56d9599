"""Weight checkpoints.

Layout: b"CCKP1", a uint32 little-endian header length, a UTF-8 JSON header
and then every tensor as little-endian float64 in header order. The header
carries the scenario and model configs, the feedback allocation used in
training and the ``name``/``shape`` of each tensor.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import struct
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig, ScenarioConfig, coerce_fields
from .estimator import ChannelDecoder, ParametricEncoder, build_models
from .quantizer import BitAllocation

MAGIC = b"CCKP1"
_LENGTH = struct.Struct("<I")


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed."""


def _named_tensors(encoder: ParametricEncoder, decoder: ChannelDecoder) -> list[tuple[str, torch.Tensor]]:
    named = [(f"encoder.{k}", v) for k, v in encoder.state_dict().items()]
    named += [(f"decoder.{k}", v) for k, v in decoder.state_dict().items()]
    return named


def save_checkpoint(
    path: str | Path,
    encoder: ParametricEncoder,
    decoder: ChannelDecoder,
    scenario: ScenarioConfig,
    model: ModelConfig,
    allocation: BitAllocation,
) -> None:
    named = _named_tensors(encoder, decoder)
    header = {
        "scenario": dataclasses.asdict(scenario),
        "model": dataclasses.asdict(model),
        "allocation": list(allocation.as_tuple()),
        "layers": [{"name": name, "shape": list(t.shape)} for name, t in named],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC + _LENGTH.pack(len(blob)) + blob)
        for _, tensor in named:
            fh.write(tensor.detach().cpu().numpy().astype("<f8").tobytes())
    logging.info("Saved checkpoint with %s tensors to %s", len(named), path)


def load_checkpoint(
    path: str | Path,
) -> tuple[ParametricEncoder, ChannelDecoder, ScenarioConfig, ModelConfig, BitAllocation]:
    data = Path(path).read_bytes()
    start = len(MAGIC) + _LENGTH.size
    if len(data) < start or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a model checkpoint")
    (length,) = _LENGTH.unpack_from(data, len(MAGIC))
    try:
        header = json.loads(data[start : start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint header in {path}") from e

    scenario = ScenarioConfig(**coerce_fields(ScenarioConfig, header["scenario"]))
    model = ModelConfig(**coerce_fields(ModelConfig, header["model"]))
    allocation = BitAllocation(*header["allocation"])
    encoder, decoder = build_models(scenario, model)

    expected = _named_tensors(encoder, decoder)
    layers = header["layers"]
    if [(l["name"], list(l["shape"])) for l in layers] != [(n, list(t.shape)) for n, t in expected]:
        raise CheckpointError(f"{path} layer list does not match the model built from its header")

    offset = start + length
    states: dict[str, dict[str, torch.Tensor]] = {"encoder": {}, "decoder": {}}
    for layer in layers:
        count = int(np.prod(layer["shape"], dtype=np.int64))
        if offset + 8 * count > len(data):
            raise CheckpointError(f"{path} is truncated at {layer['name']}")
        values = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(layer["shape"])
        owner, key = layer["name"].split(".", 1)
        states[owner][key] = torch.from_numpy(values.astype(np.float64))
        offset += 8 * count
    if offset != len(data):
        raise CheckpointError(f"{path} has {len(data) - offset} trailing bytes")
    encoder.load_state_dict(states["encoder"])
    decoder.load_state_dict(states["decoder"])
    encoder.eval()
    decoder.eval()
    return encoder, decoder, scenario, model, allocation
