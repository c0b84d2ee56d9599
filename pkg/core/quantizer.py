"""Uniform scalar quantization of parametric CSI and the feedback wire format.

Each of the four parameters has its own uniform codebook starting at zero:
angles cover ``[0, 2 pi)`` with wrap-around, the delay covers ``[0, tau_max)``
and the path loss ``[0, beta_max)``. The nearest codeword is found
arithmetically; mid-grid inputs resolve to the lower index.

Payload layout: for path 1 then path 2 and so on, the theta, tau, beta and
phi indices are written MSB first with their allocated widths. The stream is
zero-padded to a whole byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import TWO_PI, ParametricCsi
from .config import ScenarioConfig

# Wider fields would overflow the int64 index arithmetic.
MAX_BITS_PER_PARAMETER = 62
# Largest codebook materialised as an explicit grid.
MAX_GRID_SIZE = 1 << 24


class PayloadError(ValueError):
    """Raised for malformed or inconsistent feedback payloads."""


@dataclass(frozen=True)
class BitAllocation:
    bits_theta: int
    bits_tau: int
    bits_beta: int
    bits_phi: int

    def __post_init__(self) -> None:
        for name, bits in zip(("bits_theta", "bits_tau", "bits_beta", "bits_phi"), self.as_tuple()):
            if int(bits) != bits or bits < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {bits}")
            if bits > MAX_BITS_PER_PARAMETER:
                raise ValueError(f"{name}={bits} exceeds {MAX_BITS_PER_PARAMETER} bits")
            object.__setattr__(self, name, int(bits))

    @property
    def total(self) -> int:
        return sum(self.as_tuple())

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.bits_theta, self.bits_tau, self.bits_beta, self.bits_phi)

    @classmethod
    def uniform(cls, total_bits: int) -> "BitAllocation":
        """Split ``total_bits`` evenly, giving any remainder to theta, tau, beta in turn."""
        if total_bits < 0:
            raise ValueError("total_bits must be non-negative")
        base, extra = divmod(total_bits, 4)
        return cls(*(base + (1 if k < extra else 0) for k in range(4)))


@dataclass(frozen=True)
class Codebooks:
    """Four uniform grids, stored by allocation and span.

    The grid attributes materialise the codewords on demand.
    """

    allocation: BitAllocation
    tau_max_s: float
    beta_max: float

    @property
    def spans(self) -> tuple[float, float, float, float]:
        return (TWO_PI, self.tau_max_s, self.beta_max, TWO_PI)

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(span / 2.0**bits for span, bits in zip(self.spans, self.allocation.as_tuple()))

    def _grid(self, k: int) -> np.ndarray:
        size = 1 << self.allocation.as_tuple()[k]
        if size > MAX_GRID_SIZE:
            raise ValueError(f"codebook with {size} entries is too large to materialise")
        return np.arange(size) * self.steps[k]

    @property
    def theta(self) -> np.ndarray:
        return self._grid(0)

    @property
    def tau(self) -> np.ndarray:
        return self._grid(1)

    @property
    def beta(self) -> np.ndarray:
        return self._grid(2)

    @property
    def phi(self) -> np.ndarray:
        return self._grid(3)


@dataclass(frozen=True, eq=False)
class FeedbackPayload:
    allocation: BitAllocation
    indices: np.ndarray  # (L, 4) int64, columns theta, tau, beta, phi

    def __post_init__(self) -> None:
        indices = np.asarray(self.indices, dtype=np.int64)
        if indices.ndim != 2 or indices.shape[1] != 4:
            raise PayloadError(f"indices must have shape (L, 4), got {indices.shape}")
        limits = np.array([1 << b for b in self.allocation.as_tuple()], dtype=np.int64)
        if np.any(indices < 0) or np.any(indices >= limits):
            raise PayloadError("codeword index out of range for the allocation")
        object.__setattr__(self, "indices", indices)

    @property
    def n_paths(self) -> int:
        return int(self.indices.shape[0])

    @property
    def bit_length(self) -> int:
        return self.n_paths * self.allocation.total

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeedbackPayload):
            return NotImplemented
        return self.allocation == other.allocation and np.array_equal(self.indices, other.indices)


def build_codebooks(cfg: ScenarioConfig, alloc: BitAllocation) -> Codebooks:
    return Codebooks(allocation=alloc, tau_max_s=cfg.tau_max_s, beta_max=cfg.beta_max)


def quantize_values(values: np.ndarray, bits: int, span: float, periodic: bool) -> np.ndarray:
    """Nearest-codeword indices of ``values`` on the grid ``span * q / 2**bits``.

    Periodic inputs wrap modulo ``span``; the others are clamped to ``[0, span]``.
    """
    size = 1 << bits
    step = span / size
    values = np.asarray(values, dtype=np.float64)
    if periodic:
        values = np.mod(values, span)
    else:
        values = np.clip(values, 0.0, span)
    idx = np.ceil(values / step - 0.5).astype(np.int64)
    if periodic:
        return np.mod(idx, size)
    return np.clip(idx, 0, size - 1)


def dequantize_values(indices: np.ndarray, bits: int, span: float) -> np.ndarray:
    return np.asarray(indices, dtype=np.float64) * (span / 2.0**bits)


def quantize_matrix(params: np.ndarray, books: Codebooks) -> np.ndarray:
    """Indices for a ``(..., L, 4)`` parameter array."""
    params = np.asarray(params, dtype=np.float64)
    columns = [
        quantize_values(params[..., k], bits, span, periodic=k in (0, 3))
        for k, (bits, span) in enumerate(zip(books.allocation.as_tuple(), books.spans))
    ]
    return np.stack(columns, axis=-1)


def dequantize_matrix(indices: np.ndarray, books: Codebooks) -> np.ndarray:
    columns = [
        dequantize_values(indices[..., k], bits, span)
        for k, (bits, span) in enumerate(zip(books.allocation.as_tuple(), books.spans))
    ]
    return np.stack(columns, axis=-1)


def quantize_csi(csi: ParametricCsi, books: Codebooks) -> tuple[FeedbackPayload, ParametricCsi]:
    payload = FeedbackPayload(books.allocation, quantize_matrix(csi.as_matrix(), books))
    return payload, dequantize(payload, books)


def dequantize(payload: FeedbackPayload, books: Codebooks) -> ParametricCsi:
    if payload.allocation != books.allocation:
        raise PayloadError("payload allocation does not match the codebooks")
    return ParametricCsi.from_matrix(dequantize_matrix(payload.indices, books))


def _field_widths(alloc: BitAllocation, n_paths: int) -> np.ndarray:
    return np.tile(np.array(alloc.as_tuple(), dtype=np.int64), n_paths)


def encode_payload(payload: FeedbackPayload) -> bytes:
    widths = _field_widths(payload.allocation, payload.n_paths)
    values = payload.indices.reshape(-1)
    bits = [
        (int(value) >> np.arange(width - 1, -1, -1)) & 1
        for value, width in zip(values, widths)
        if width
    ]
    if not bits:
        return b""
    return np.packbits(np.concatenate(bits).astype(np.uint8)).tobytes()


def decode_payload(data: bytes, alloc: BitAllocation, n_paths: int) -> FeedbackPayload:
    if n_paths < 1:
        raise PayloadError("n_paths must be >= 1")
    n_bits = n_paths * alloc.total
    n_bytes = math.ceil(n_bits / 8)
    if len(data) < n_bytes:
        raise PayloadError(f"truncated payload: need {n_bytes} bytes, got {len(data)}")
    if len(data) > n_bytes:
        raise PayloadError(f"payload has {len(data) - n_bytes} trailing bytes")
    stream = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n_bits].astype(np.int64)
    values = []
    offset = 0
    for width in _field_widths(alloc, n_paths):
        value = 0
        for bit in stream[offset : offset + width]:
            value = (value << 1) | int(bit)
        values.append(value)
        offset += width
    return FeedbackPayload(alloc, np.array(values, dtype=np.int64).reshape(n_paths, 4))


def rvq_feedback_bits(n_f: int, n_t: int, snr_db: float) -> int:
    """Feedback bits a random vector quantiser needs: ``(N_f N_t - 1) / 3 * SNR_dB``, rounded up."""
    if snr_db < 0:
        raise ValueError(f"snr_db must be non-negative, got {snr_db}")
    return math.ceil(round((n_f * n_t - 1) / 3 * snr_db, 9))
