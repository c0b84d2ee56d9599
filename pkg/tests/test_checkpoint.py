from pathlib import Path
import sys

import pytest
import torch

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from core.config import ModelConfig, ScenarioConfig
from core.estimator import build_models
from core.quantizer import BitAllocation


@pytest.fixture
def saved(tmp_path):
    scenario = ScenarioConfig(n_tx=4, n_subcarriers=8, n_paths=2, window_len=2, tau_max_s=1e-9)
    model = ModelConfig(d_model=8, n_heads=2, n_truncated=4, slot_embedding=False)
    encoder, decoder = build_models(scenario, model, seed=3)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, encoder, decoder, scenario, model, BitAllocation(4, 9, 2, 3))
    return path, encoder, decoder, scenario, model


def test_checkpoint_restores_weights_and_settings(saved):
    path, encoder, decoder, scenario, model = saved
    enc, dec, scenario2, model2, alloc = load_checkpoint(path)
    assert scenario2 == scenario
    assert model2 == model
    assert alloc.as_tuple() == (4, 9, 2, 3)
    for a, b in zip(encoder.state_dict().values(), enc.state_dict().values()):
        assert torch.equal(a, b)
    for a, b in zip(decoder.state_dict().values(), dec.state_dict().values()):
        assert torch.equal(a, b)
    history = torch.randn(1, 2, 8, 4, dtype=torch.complex128)
    assert torch.equal(encoder(history)[0], enc(history)[0])


def test_checkpoint_header_is_json(saved):
    path = saved[0]
    raw = path.read_bytes()
    assert raw[:5] == b"CCKP1"
    length = int.from_bytes(raw[5:9], "little")
    assert b'"layers"' in raw[9 : 9 + length]


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"NOPE!" + b[5:],
        lambda b: b[:-8],
        lambda b: b + b"\x00" * 8,
        lambda b: b[:9] + b"x" + b[10:],
    ],
)
def test_corrupt_checkpoints_are_rejected(saved, mutate):
    path = saved[0]
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
