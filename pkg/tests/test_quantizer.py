from pathlib import Path
import math
import sys

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core.channel import TWO_PI, ParametricCsi, sample_parametric_csi, sample_parametric_csi_batch
from core.config import ScenarioConfig
from core.quantizer import (
    BitAllocation,
    FeedbackPayload,
    PayloadError,
    build_codebooks,
    decode_payload,
    dequantize,
    dequantize_matrix,
    encode_payload,
    quantize_csi,
    quantize_matrix,
    quantize_values,
    rvq_feedback_bits,
)


@pytest.fixture
def cfg():
    return ScenarioConfig(n_tx=16, n_subcarriers=32, n_paths=3)


def test_codebook_grids_have_expected_size_and_spacing(cfg):
    books = build_codebooks(cfg, BitAllocation(3, 4, 2, 5))
    assert len(books.theta) == 8 and len(books.tau) == 16
    assert len(books.beta) == 4 and len(books.phi) == 32
    assert books.theta[0] == 0.0
    assert np.allclose(np.diff(books.tau), cfg.tau_max_s / 16)
    assert books.beta[-1] == pytest.approx(cfg.beta_max * 3 / 4)


def test_huge_codebooks_are_not_materialised(cfg):
    books = build_codebooks(cfg, BitAllocation(40, 1, 1, 1))
    assert books.steps[0] == pytest.approx(TWO_PI / 2**40)
    with pytest.raises(ValueError):
        books.theta


def test_bit_allocation_validates_widths():
    assert BitAllocation(1, 2, 3, 4).total == 10
    with pytest.raises(ValueError):
        BitAllocation(-1, 0, 0, 0)
    with pytest.raises(ValueError):
        BitAllocation(63, 0, 0, 0)
    assert BitAllocation.uniform(10).as_tuple() == (3, 3, 2, 2)


def test_mid_grid_ties_resolve_to_lower_index():
    step = TWO_PI / 8
    assert quantize_values(np.array([0.5 * step, 1.5 * step]), 3, TWO_PI, periodic=True).tolist() == [0, 1]


def test_angles_wrap_around():
    step = TWO_PI / 8
    assert quantize_values(np.array([TWO_PI - 0.1 * step, -0.1 * step]), 3, TWO_PI, periodic=True).tolist() == [0, 0]


def test_delay_and_gain_are_clamped(cfg):
    books = build_codebooks(cfg, BitAllocation(2, 2, 2, 2))
    idx = quantize_matrix(np.array([[0.0, 2 * cfg.tau_max_s, -1.0, 0.0]]), books)
    assert idx.tolist() == [[0, 3, 0, 0]]


def test_zero_bits_give_a_single_codeword(cfg):
    books = build_codebooks(cfg, BitAllocation(0, 0, 0, 0))
    csi = sample_parametric_csi(cfg, np.random.default_rng(0))
    payload, quantized = quantize_csi(csi, books)
    assert np.all(payload.indices == 0)
    assert np.all(quantized.as_matrix() == 0)
    assert encode_payload(payload) == b""


def test_quantization_error_within_half_step_and_uniform(cfg):
    alloc = BitAllocation(6, 6, 6, 6)
    books = build_codebooks(cfg, alloc)
    params = sample_parametric_csi_batch(cfg, np.random.default_rng(42), 100_000 // cfg.n_paths + 1)
    steps = np.array(books.steps)
    # Delay and gain are drawn over whole cells only; the end cells of a clamped grid are uneven.
    rng = np.random.default_rng(43)
    for k, span in ((1, cfg.tau_max_s), (2, cfg.beta_max)):
        params[..., k] = rng.uniform(steps[k] / 2, span - steps[k] / 2, params.shape[:-1])
    quantized = dequantize_matrix(quantize_matrix(params, books), books)
    error = quantized - params
    error[..., [0, 3]] = np.angle(np.exp(1j * error[..., [0, 3]]))
    for k in range(4):
        e = error[..., k].ravel()
        assert np.all(np.abs(e) <= steps[k] / 2 * (1 + 1e-9))
        result = stats.kstest(e / steps[k], stats.uniform(loc=-0.5, scale=1.0).cdf)
        assert result.pvalue > 0.01


def test_payload_packs_msb_first(cfg):
    alloc = BitAllocation(2, 2, 2, 2)
    payload = FeedbackPayload(alloc, np.array([[1, 2, 3, 0]]))
    assert encode_payload(payload) == bytes([0x6C])
    assert decode_payload(bytes([0x6C]), alloc, 1) == payload


def test_payload_pads_to_whole_bytes():
    alloc = BitAllocation(3, 1, 0, 1)
    payload = FeedbackPayload(alloc, np.array([[7, 1, 0, 1], [0, 0, 0, 1]]))
    data = encode_payload(payload)
    # 111 1 1 | 000 0 1 then 2 zero pad bits.
    assert data == bytes([0b11111000, 0b01000000])
    assert decode_payload(data, alloc, 2) == payload


def test_payload_round_trip_through_codebooks(cfg):
    alloc = BitAllocation(7, 9, 4, 5)
    books = build_codebooks(cfg, alloc)
    csi = sample_parametric_csi(cfg, np.random.default_rng(8))
    payload, quantized = quantize_csi(csi, books)
    data = encode_payload(payload)
    assert len(data) == math.ceil(payload.bit_length / 8)
    decoded = decode_payload(data, alloc, cfg.n_paths)
    assert np.array_equal(dequantize(decoded, books).as_matrix(), quantized.as_matrix())


@pytest.mark.parametrize("data", [b"", b"\x00\x00"])
def test_decode_rejects_wrong_lengths(data):
    with pytest.raises(PayloadError):
        decode_payload(data, BitAllocation(2, 2, 2, 2), 1)


def test_payload_rejects_out_of_range_indices():
    with pytest.raises(PayloadError):
        FeedbackPayload(BitAllocation(1, 1, 1, 1), np.array([[2, 0, 0, 0]]))


def test_dequantize_checks_allocation(cfg):
    payload = FeedbackPayload(BitAllocation(1, 1, 1, 1), np.zeros((1, 4)))
    with pytest.raises(PayloadError):
        dequantize(payload, build_codebooks(cfg, BitAllocation(2, 1, 1, 0)))


def test_quantize_csi_returns_parametric_csi(cfg):
    books = build_codebooks(cfg, BitAllocation(4, 4, 4, 4))
    _, quantized = quantize_csi(ParametricCsi([0.01], [0.0], [0.5], [0.0]), books)
    assert quantized.path_loss[0] == pytest.approx(0.5)
    assert quantized.aod_rad[0] == 0.0


@pytest.mark.parametrize("snr_db, expected", [(0, 0), (10, 850), (20, 1700), (3.3, 281)])
def test_rvq_feedback_bits(snr_db, expected):
    assert rvq_feedback_bits(16, 16, snr_db) == expected
