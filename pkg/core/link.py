"""Link-level BER simulation with beamforming from a channel estimate.

Per subcarrier the BS transmits unit-energy QPSK symbols along
``r = h_hat / ||h_hat||``. The UE receives ``y = h^H r x + n`` with
``n ~ CN(0, 1/SNR)`` and hard-detects after de-rotating by the effective
gain ``h^H r``. SNR is the transmit symbol energy over the noise variance,
before any beamforming gain.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

from .config import LinkSimConfig
from .util import from_db


def qpsk_ber_theory(snr_linear: float | np.ndarray) -> np.ndarray:
    """Gray-coded QPSK bit error rate over AWGN at symbol SNR ``snr_linear``."""
    return 0.5 * erfc(np.sqrt(np.asarray(snr_linear, dtype=np.float64) / 2))


def effective_gains(truth: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    """``h[s]^H r[s]`` for every subcarrier of an ``(N_f, N_t)`` pair."""
    # Rows hold h[s]^H, so the beamformer is the conjugated estimate row.
    beams = estimate.conj()
    norms = np.linalg.norm(beams, axis=-1, keepdims=True)
    beams = np.divide(beams, norms, out=np.zeros_like(beams), where=norms > 0)
    return np.sum(truth * beams, axis=-1)


def simulate_ber(
    truth: np.ndarray,
    estimate: np.ndarray,
    lc: LinkSimConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Measured BER for every SNR in ``lc.snr_db``.

    ``truth`` and ``estimate`` are ``(N_f, N_t)`` or batched ``(B, N_f, N_t)``.
    """
    truth, estimate = np.asarray(truth), np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    gains = effective_gains(truth, estimate).reshape(-1, 1)
    n_symbols = lc.symbols_per_subcarrier
    out = np.empty(len(lc.snr_db))
    for i, snr_db in enumerate(lc.snr_db):
        bits = rng.integers(0, 2, size=(gains.shape[0], n_symbols, 2))
        symbols = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2)
        sigma = np.sqrt(1.0 / from_db(snr_db) / 2)
        noise = sigma * (rng.standard_normal(symbols.shape) + 1j * rng.standard_normal(symbols.shape))
        z = gains.conj() * (gains * symbols + noise)
        detected = np.stack([z.real < 0, z.imag < 0], axis=-1)
        out[i] = np.mean(detected != bits.astype(bool))
    return out
