from pathlib import Path
import struct
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core.channel import channel_sequence
from core.config import ScenarioConfig
from core.dataset import DatasetFormatError, generate_dataset, read_dataset, split_dataset, write_dataset


@pytest.fixture
def cfg():
    return ScenarioConfig(n_tx=4, n_subcarriers=8, n_paths=2, window_len=3)


def test_generated_shapes(cfg):
    data = generate_dataset(cfg, 5, seed=1)
    assert len(data) == 5
    assert data.history.shape == (5, 3, 8, 4)
    assert data.target.shape == (5, 8, 4)
    assert data.target_params.shape == (5, 2, 4)
    assert data.dims == (8, 4, 3, 2)


def test_samples_can_be_regenerated_individually(cfg):
    data = generate_dataset(cfg, 4, seed=7)
    child = np.random.SeedSequence(7).spawn(4)[2]
    seq = channel_sequence(cfg, np.random.default_rng(child))
    assert np.array_equal(data.target[2], seq.target)


def test_seed_fixes_every_byte(cfg, tmp_path):
    write_dataset(tmp_path / "a.bin", generate_dataset(cfg, 3, seed=4))
    write_dataset(tmp_path / "b.bin", generate_dataset(cfg, 3, seed=4))
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_file_layout_and_reload(cfg, tmp_path):
    data = generate_dataset(cfg, 3, seed=2)
    path = tmp_path / "data.bin"
    write_dataset(path, data)
    raw = path.read_bytes()
    assert raw[:5] == b"CCSI1"
    assert struct.unpack_from("<5I", raw, 5) == (8, 4, 3, 2, 3)
    per_sample = 4 * 8 * 4 * 2 * 4 + 2 * 4 * 8
    assert len(raw) == 5 + 20 + 3 * per_sample

    loaded = read_dataset(path, cfg)
    assert np.allclose(loaded.history, data.history, atol=1e-6)
    assert np.allclose(loaded.target, data.target, atol=1e-6)
    assert np.array_equal(loaded.target_params, data.target_params)


def test_read_rejects_mismatched_scenario(cfg, tmp_path):
    path = tmp_path / "data.bin"
    write_dataset(path, generate_dataset(cfg, 1))
    with pytest.raises(DatasetFormatError, match="does not match"):
        read_dataset(path, ScenarioConfig(n_tx=8, n_subcarriers=8, n_paths=2, window_len=3))


@pytest.mark.parametrize("mutate", [lambda b: b"XXXXX" + b[5:], lambda b: b[:-3]])
def test_read_rejects_corrupt_files(cfg, tmp_path, mutate):
    path = tmp_path / "data.bin"
    write_dataset(path, generate_dataset(cfg, 2))
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_split_keeps_proportions(cfg):
    parts = split_dataset(generate_dataset(cfg, 30, seed=0))
    assert [len(parts[name]) for name in ("train", "val", "test")] == [20, 5, 5]
    with pytest.raises(ValueError):
        split_dataset(generate_dataset(cfg, 2), (0, 0, 0))
