"""Channel reconstruction metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .util import to_db


@dataclass(frozen=True)
class Metrics:
    """One result row. ``cosine_similarity`` is NaN when a reconstructed subcarrier is all zeros."""

    nmse: float
    nmse_db: float
    cosine_similarity: float
    ber: float
    snr_db: float
    noise_variance: float

    def __post_init__(self) -> None:
        if self.nmse < 0:
            raise ValueError("nmse must be non-negative")
        if not (np.isnan(self.cosine_similarity) or 0.0 <= self.cosine_similarity <= 1.0 + 1e-12):
            raise ValueError("cosine similarity must lie in [0, 1]")
        if not 0.0 <= self.ber <= 1.0:
            raise ValueError("ber must lie in [0, 1]")


def nmse_per_sample(truth: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    """``||H_hat - H||_F^2 / ||H||_F^2`` for each matrix in a ``(..., N_f, N_t)`` batch."""
    truth, estimate = np.asarray(truth), np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    energy = np.sum(np.abs(truth) ** 2, axis=(-2, -1))
    if np.any(energy == 0):
        raise ValueError("truth channel has zero energy")
    return np.sum(np.abs(estimate - truth) ** 2, axis=(-2, -1)) / energy


def nmse(truth: np.ndarray, estimate: np.ndarray) -> float:
    """Mean NMSE (linear) over the batch."""
    return float(np.mean(nmse_per_sample(truth, estimate)))


def nmse_db(truth: np.ndarray, estimate: np.ndarray) -> float:
    return to_db(nmse(truth, estimate))


def cosine_similarity(truth: np.ndarray, estimate: np.ndarray) -> float:
    """Mean over subcarriers (and batch) of ``|h_hat^H h| / (||h_hat|| ||h||)``."""
    truth, estimate = np.asarray(truth), np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    norms = np.linalg.norm(truth, axis=-1) * np.linalg.norm(estimate, axis=-1)
    if np.any(norms == 0):
        raise ValueError("zero subcarrier vector in cosine similarity")
    inner = np.abs(np.sum(estimate.conj() * truth, axis=-1))
    return float(np.mean(np.minimum(inner / norms, 1.0)))
