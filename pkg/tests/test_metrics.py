from pathlib import Path
import math
import sys

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from core.metrics import Metrics, cosine_similarity, nmse, nmse_db, nmse_per_sample


def _random_channel(rng, shape=(8, 4)):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_nmse_reference_values():
    h = _random_channel(np.random.default_rng(0))
    assert nmse(h, h) == 0.0
    assert nmse_db(h, h) == -math.inf
    assert nmse(h, np.zeros_like(h)) == pytest.approx(1.0)
    assert nmse(h, 2 * h) == pytest.approx(1.0)


def test_nmse_averages_over_batch():
    h = np.ones((2, 3, 3), dtype=complex)
    estimate = np.stack([h[0], np.zeros((3, 3))])
    assert nmse_per_sample(h, estimate).tolist() == [0.0, 1.0]
    assert nmse(h, estimate) == pytest.approx(0.5)


def test_nmse_rejects_bad_inputs():
    with pytest.raises(ValueError):
        nmse(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        nmse(np.ones((2, 2)), np.ones((2, 3)))


def test_cosine_similarity_reference_values():
    rng = np.random.default_rng(1)
    h = _random_channel(rng)
    assert cosine_similarity(h, 3.5 * h) == pytest.approx(1.0)
    truth = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
    orthogonal = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    assert cosine_similarity(truth, orthogonal) == 0.0


def test_cosine_similarity_matches_per_subcarrier_loop():
    rng = np.random.default_rng(2)
    truth, estimate = _random_channel(rng), _random_channel(rng)
    expected = np.mean(
        [abs(np.vdot(e, t)) / (np.linalg.norm(e) * np.linalg.norm(t)) for t, e in zip(truth, estimate)]
    )
    assert cosine_similarity(truth, estimate) == pytest.approx(expected)


def test_cosine_similarity_rejects_zero_vectors():
    with pytest.raises(ValueError):
        cosine_similarity(np.ones((2, 2)), np.zeros((2, 2)))


def test_metrics_are_invariant_to_a_common_unitary_rotation():
    rng = np.random.default_rng(3)
    truth, estimate = _random_channel(rng), _random_channel(rng)
    q, _ = np.linalg.qr(_random_channel(rng, (4, 4)))
    assert nmse(truth @ q, estimate @ q) == pytest.approx(nmse(truth, estimate))
    assert cosine_similarity(truth @ q, estimate @ q) == pytest.approx(cosine_similarity(truth, estimate))


@pytest.mark.parametrize(
    "kwargs",
    [{"nmse": -0.1}, {"cosine_similarity": 1.5}, {"ber": 1.2}],
)
def test_metrics_record_validates_ranges(kwargs):
    values = dict(nmse=0.1, nmse_db=-10.0, cosine_similarity=0.9, ber=0.01, snr_db=10.0, noise_variance=0.1)
    values.update(kwargs)
    with pytest.raises(ValueError):
        Metrics(**values)


def test_metrics_record_allows_undefined_cosine():
    record = Metrics(nmse=1.0, nmse_db=0.0, cosine_similarity=float("nan"), ber=0.5, snr_db=0.0, noise_variance=1.0)
    assert np.isnan(record.cosine_similarity)
