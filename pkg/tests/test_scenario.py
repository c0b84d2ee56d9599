from pathlib import Path
import json
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import core.scenario as scenario
from core.checkpoint import save_checkpoint
from core.config import LinkSimConfig, ModelConfig, ScenarioConfig
from core.estimator import build_models, oracle_estimator
from core.quantizer import BitAllocation
from core.scenario import CSV_NAME, MANIFEST_NAME, PipelineSpec, run_scenario


@pytest.fixture
def cfg():
    return ScenarioConfig(n_tx=8, n_subcarriers=16, n_paths=3, window_len=2)


LINK = LinkSimConfig(symbols_per_subcarrier=32, snr_db=(0.0, 10.0))


def test_oracle_nmse_falls_with_every_budget_step(cfg, tmp_path):
    spec = PipelineSpec(estimator="oracle", total_bits=(32, 64, 96, 128), n_samples=16)
    frame = run_scenario(cfg, spec, [0], tmp_path, LINK)
    per_budget = frame[frame.snr_db == 0.0].set_index("total_bits")["nmse"]
    assert list(per_budget.index) == [32, 64, 96, 128]
    assert np.all(np.diff(per_budget.values) < 0)
    assert per_budget[128] < 1e-10
    assert set(frame.payload_bits) == {3 * 32, 3 * 64, 3 * 96, 3 * 128}


def test_reruns_write_identical_files(cfg, tmp_path):
    spec = PipelineSpec(estimator="oracle", total_bits=(32,), n_samples=4)
    run_scenario(cfg, spec, [1, 2], tmp_path / "a", LINK)
    run_scenario(cfg, spec, [1, 2], tmp_path / "b", LINK)
    for name in (CSV_NAME, MANIFEST_NAME):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_columns_and_manifest(cfg, tmp_path):
    spec = PipelineSpec(estimator="oracle", total_bits=(32, 64), n_samples=4)
    run_scenario(cfg, spec, [3], tmp_path, LINK)
    frame = pd.read_csv(tmp_path / CSV_NAME)
    assert list(frame.columns) == [
        "seed",
        "estimator",
        "allocation_method",
        "total_bits",
        "payload_bits",
        "snr_db",
        "nmse",
        "nmse_db",
        "cosine_similarity",
        "ber",
    ]
    assert len(frame) == 2 * 2
    assert frame.ber.between(0, 1).all()
    manifest = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert len(manifest["config_hash"]) == 64
    assert manifest["seeds"] == [3]
    assert manifest["scenario"]["n_tx"] == 8
    assert "snr_reference" in manifest and "version" in manifest


def test_static_persistence_writes_minus_inf(tmp_path):
    cfg = ScenarioConfig(n_tx=4, n_subcarriers=8, n_paths=2, window_len=2, ue_speed_mps=0.0)
    spec = PipelineSpec(estimator="persistence", total_bits=(32,), n_samples=3)
    run_scenario(cfg, spec, [0], tmp_path, LINK)
    lines = (tmp_path / CSV_NAME).read_text().splitlines()[1:]
    assert lines and all(line.split(",")[7] == "-inf" for line in lines)
    assert all(line.split(",")[4] == "0" for line in lines)


def test_persistence_error_grows_with_speed(tmp_path):
    values = []
    for kmh in (3, 60, 108):
        cfg = ScenarioConfig(n_tx=8, n_subcarriers=16, n_paths=3, window_len=2, ue_speed_mps=kmh / 3.6)
        spec = PipelineSpec(estimator="persistence", total_bits=(32,), n_samples=64)
        frame = run_scenario(cfg, spec, [0], tmp_path / str(kmh), LinkSimConfig(symbols_per_subcarrier=4, snr_db=(10.0,)))
        values.append(frame.nmse.iloc[0])
    assert values[0] < values[1] < values[2]


def test_observation_noise_changes_trained_estimates_per_snr(cfg, tmp_path):
    model = ModelConfig(d_model=8, n_heads=2, n_truncated=4)
    encoder, decoder = build_models(cfg, model, seed=0)
    ckpt = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, encoder, decoder, cfg, model, BitAllocation(8, 8, 8, 8))
    spec = PipelineSpec(estimator="trained", checkpoint=str(ckpt), total_bits=(32,), n_samples=4, observation_noise=True)
    frame = run_scenario(cfg, spec, [0], tmp_path / "out", LINK)
    assert frame.nmse.iloc[0] != frame.nmse.iloc[1]


def test_checkpoint_dimensions_must_match(cfg, tmp_path):
    other = ScenarioConfig(n_tx=4, n_subcarriers=16, n_paths=3, window_len=2)
    model = ModelConfig(d_model=8, n_heads=2, n_truncated=4)
    encoder, decoder = build_models(other, model)
    ckpt = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, encoder, decoder, other, model, BitAllocation(8, 8, 8, 8))
    spec = PipelineSpec(estimator="trained", checkpoint=str(ckpt), n_samples=2)
    with pytest.raises(ValueError, match="dimensions"):
        run_scenario(cfg, spec, [0], tmp_path / "out", LINK)


@pytest.mark.parametrize(
    "kwargs",
    [{"estimator": "lasso"}, {"estimator": "trained"}, {"total_bits": ()}, {"n_samples": 0}],
)
def test_pipeline_spec_validation(kwargs):
    with pytest.raises(ValueError):
        PipelineSpec(**kwargs)


def test_seeds_are_required(cfg, tmp_path):
    with pytest.raises(ValueError):
        run_scenario(cfg, PipelineSpec(), [], tmp_path, LINK)


def test_oracle_rows_go_through_the_oracle_estimator(cfg, tmp_path, monkeypatch):
    seen = []

    def counting(target):
        seen.append(target.n_paths)
        return oracle_estimator(target)

    monkeypatch.setattr(scenario, "oracle_estimator", counting)
    spec = PipelineSpec(estimator="oracle", total_bits=(32, 64), n_samples=5)
    run_scenario(cfg, spec, [0], tmp_path, LINK)
    assert seen == [cfg.n_paths] * 10
