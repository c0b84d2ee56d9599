"""Attention-based parametric CSI estimator and channel decoder.

The encoder maps a window of past channels to the ``L x 4`` parameters of the
next slot. Each slot is turned into an angle-delay map by a 2D DFT, truncated
to its first delay rows, embedded by two fully connected stages and mixed
across slots by one multi-head self-attention block. The decoder reverses the
direction: one token per path, attention across paths, a fully connected
expansion to a 2-channel ``N_f x N_t`` map and a 3x3 convolution.

All tensors are float64 (complex128 for channels).
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from .channel import TWO_PI, ParametricCsi, subcarrier_frequencies
from .config import ModelConfig, ScenarioConfig
from .quantizer import BitAllocation

DTYPE = torch.float64
LEAKY_SLOPE = 0.1


def leaky_relu(x: torch.Tensor, slope: float = LEAKY_SLOPE) -> torch.Tensor:
    """``max(slope * x, x)``."""
    return torch.maximum(slope * x, x)


def layer_norm(z: torch.Tensor, scale: torch.Tensor, shift: torch.Tensor, eps: float) -> torch.Tensor:
    mu = z.mean(dim=-1, keepdim=True)
    var = z.var(dim=-1, unbiased=False, keepdim=True)
    return scale * (z - mu) / torch.sqrt(var + eps) + shift


def multi_head_self_attention(
    s: torch.Tensor,
    w_q: torch.Tensor,
    w_k: torch.Tensor,
    w_v: torch.Tensor,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Scaled dot-product self-attention with per-head projections.

    Args:
        s: Input rows, shape ``(..., T, d_model)``.
        w_q, w_k, w_v: Projections of shape ``(N_h, d_model, d_model / N_h)``.
    Returns:
        The concatenated head outputs ``(..., T, d_model)`` and the attention
        maps ``(..., N_h, T, T)``.
    """
    head_dim = w_q.shape[-1]
    q = torch.einsum("...td,hde->...hte", s, w_q)
    k = torch.einsum("...td,hde->...hte", s, w_k)
    v = torch.einsum("...td,hde->...hte", s, w_v)
    logits = q @ k.transpose(-1, -2) / math.sqrt(head_dim)
    attn = torch.softmax(logits, dim=-1)
    z = attn @ v  # (..., N_h, T, head_dim)
    z = z.transpose(-3, -2)
    return z.reshape(*z.shape[:-2], -1), attn


def angle_delay_features(channels: torch.Tensor, n_truncated: int) -> torch.Tensor:
    """Flattened real/imag angle-delay maps truncated to ``n_truncated`` delay rows.

    ``channels`` has shape ``(..., N_f, N_t)``; the result has
    ``2 * n_truncated * N_t`` features on its last axis.
    """
    n_f = channels.shape[-2]
    if n_truncated > n_f:
        raise ValueError(f"n_truncated={n_truncated} exceeds the {n_f} subcarriers")
    ad = torch.fft.fft2(channels, norm="ortho")[..., :n_truncated, :]
    stacked = torch.stack([ad.real, ad.imag], dim=-3)
    return stacked.flatten(start_dim=-3)


def _projection(n_heads: int, d_model: int) -> nn.Parameter:
    return nn.Parameter(torch.randn(n_heads, d_model, d_model // n_heads, dtype=DTYPE) / math.sqrt(d_model))


class _AttentionBlock(nn.Module):
    """Self-attention followed by layer normalisation."""

    def __init__(self, model: ModelConfig) -> None:
        super().__init__()
        self.w_q = _projection(model.n_heads, model.d_model)
        self.w_k = _projection(model.n_heads, model.d_model)
        self.w_v = _projection(model.n_heads, model.d_model)
        self.ln_scale = nn.Parameter(torch.ones(model.d_model, dtype=DTYPE))
        self.ln_shift = nn.Parameter(torch.zeros(model.d_model, dtype=DTYPE))
        self.eps = model.ln_eps

    def forward(self, s: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        z, attn = multi_head_self_attention(s, self.w_q, self.w_k, self.w_v)
        return layer_norm(z, self.ln_scale, self.ln_shift, self.eps), attn


def parameter_upper_bounds(cfg: ScenarioConfig) -> torch.Tensor:
    return torch.tensor([TWO_PI, cfg.tau_max_s, cfg.beta_max, TWO_PI], dtype=DTYPE)


class ParametricEncoder(nn.Module):
    def __init__(self, scenario: ScenarioConfig, model: ModelConfig) -> None:
        super().__init__()
        if model.n_truncated > scenario.n_subcarriers:
            raise ValueError(
                f"n_truncated={model.n_truncated} exceeds n_subcarriers={scenario.n_subcarriers}"
            )
        if scenario.window_len < 1:
            raise ValueError("window_len must be >= 1")
        features = 2 * model.n_truncated * scenario.n_tx
        hidden = model.hidden_factor * model.d_model
        self.n_truncated = model.n_truncated
        self.n_paths = scenario.n_paths
        self.embed_in = nn.Linear(features, hidden, dtype=DTYPE)
        self.embed_out = nn.Linear(hidden, model.d_model, dtype=DTYPE)
        self.slot_embedding = (
            nn.Parameter(torch.zeros(scenario.window_len, model.d_model, dtype=DTYPE))
            if model.slot_embedding
            else None
        )
        self.attention = _AttentionBlock(model)
        self.head = nn.Linear(scenario.window_len * model.d_model, 4 * scenario.n_paths, dtype=DTYPE)
        self.register_buffer("upper", parameter_upper_bounds(scenario))

    def input_embedding(self, history: torch.Tensor) -> torch.Tensor:
        """``(B, w, N_f, N_t)`` complex channels to ``(B, w, d_model)``."""
        x = angle_delay_features(history, self.n_truncated)
        s = self.embed_out(leaky_relu(self.embed_in(x)))
        if self.slot_embedding is not None:
            s = s + self.slot_embedding
        return s

    def forward(self, history: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Return parameter estimates ``(B, L, 4)`` and attention maps ``(B, N_h, w, w)``."""
        z, attn = self.attention(self.input_embedding(history))
        raw = self.head(z.flatten(start_dim=-2)).reshape(-1, self.n_paths, 4)
        return torch.sigmoid(raw) * self.upper, attn


class ChannelDecoder(nn.Module):
    def __init__(self, scenario: ScenarioConfig, model: ModelConfig) -> None:
        super().__init__()
        self.n_subcarriers = scenario.n_subcarriers
        self.n_tx = scenario.n_tx
        self.register_buffer("upper", parameter_upper_bounds(scenario))
        self.embed = nn.Linear(4, model.d_model, dtype=DTYPE)
        self.attention = _AttentionBlock(model)
        self.expand = nn.Linear(
            scenario.n_paths * model.d_model, 2 * scenario.n_subcarriers * scenario.n_tx, dtype=DTYPE
        )
        self.conv = nn.Conv2d(2, 2, model.conv_kernel, padding=model.conv_kernel // 2, dtype=DTYPE)

    def forward(self, params: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Return the 2-channel channel map ``(B, 2, N_f, N_t)`` and attention ``(B, N_h, L, L)``."""
        tokens = self.embed(params / self.upper)
        z, attn = self.attention(tokens)
        maps = self.expand(z.flatten(start_dim=-2)).reshape(-1, 2, self.n_subcarriers, self.n_tx)
        return self.conv(leaky_relu(maps)), attn


def to_complex(maps: torch.Tensor) -> torch.Tensor:
    """``(..., 2, N_f, N_t)`` real/imag maps to complex ``(..., N_f, N_t)``."""
    return torch.complex(maps[..., 0, :, :], maps[..., 1, :, :])


def build_models(
    scenario: ScenarioConfig, model: ModelConfig, seed: int = 0
) -> tuple[ParametricEncoder, ChannelDecoder]:
    torch.manual_seed(seed)
    return ParametricEncoder(scenario, model), ChannelDecoder(scenario, model)


def assemble_channel_torch(cfg: ScenarioConfig, params: torch.Tensor) -> torch.Tensor:
    """Differentiable channel assembly for ``(B, L, 4)`` parameters."""
    theta, tau, beta, phi = params.unbind(dim=-1)
    freqs = torch.as_tensor(subcarrier_frequencies(cfg), dtype=DTYPE)
    n = torch.arange(cfg.n_tx, dtype=DTYPE)
    kappa = TWO_PI * cfg.antenna_spacing_m / cfg.wavelength_m
    a_t = torch.exp(-1j * kappa * torch.sin(theta)[..., None] * n)  # (B, L, N_t)
    a_f = torch.exp(1j * TWO_PI * freqs[:, None] * tau[..., None, :])  # (B, N_f, L)
    gains = beta * torch.exp(-1j * phi)
    return torch.einsum("bsl,bl,bln->bsn", a_f, gains.to(a_f.dtype), a_t.conj())


def quantize_tensor(params: torch.Tensor, alloc: BitAllocation, upper: torch.Tensor) -> torch.Tensor:
    """Snap ``(..., L, 4)`` parameters to the uniform codebooks."""
    columns = []
    for k, bits in enumerate(alloc.as_tuple()):
        size = 2**bits
        span = float(upper[k])
        step = span / size
        x = params[..., k]
        if k in (0, 3):
            idx = torch.remainder(torch.ceil(torch.remainder(x, span) / step - 0.5), size)
        else:
            idx = torch.clamp(torch.ceil(torch.clamp(x, 0.0, span) / step - 0.5), 0, size - 1)
        columns.append(idx * step)
    return torch.stack(columns, dim=-1)


def straight_through_quantize(params: torch.Tensor, alloc: BitAllocation, upper: torch.Tensor) -> torch.Tensor:
    """Quantized values in the forward pass, identity gradient in the backward pass."""
    return params + (quantize_tensor(params, alloc, upper) - params).detach()


@torch.no_grad()
def encoder_forward(encoder: ParametricEncoder, history: np.ndarray) -> ParametricCsi:
    """Estimate the next-slot parameters from one ``(w, N_f, N_t)`` window."""
    encoder.eval()
    params, _ = encoder(torch.as_tensor(np.asarray(history, dtype=np.complex128))[None])
    return ParametricCsi.from_matrix(params[0].numpy())


@torch.no_grad()
def decoder_forward(decoder: ChannelDecoder, csi: ParametricCsi) -> np.ndarray:
    """Reconstruct the channel from (de-quantized) parameters.

    Returns the real ``(2, N_f, N_t)`` map, real part first; see
    :func:`to_complex`.
    """
    decoder.eval()
    maps, _ = decoder(torch.as_tensor(csi.as_matrix(), dtype=DTYPE)[None])
    return maps[0].numpy()


def oracle_estimator(target: ParametricCsi) -> ParametricCsi:
    """Return the true next-slot parameters."""
    return ParametricCsi.from_matrix(target.as_matrix())


def persistence_baseline(history: np.ndarray) -> np.ndarray:
    """Predict the next channel as the last observed one."""
    history = np.asarray(history)
    if history.ndim < 3 or history.shape[-3] == 0:
        raise ValueError("history must contain at least one channel")
    return history[..., -1, :, :].copy()
