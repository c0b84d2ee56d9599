"""Training loop for the encoder/decoder pair.

Each iteration runs encoder -> quantize -> de-quantize -> decoder. The encoder
is trained on the NMSE between the channel assembled from its parameter
estimate and the true next-slot channel; the decoder on the NMSE of its
reconstruction. Both use SGD with a step learning-rate decay. The decoder
loss reaches the encoder (through a straight-through quantizer) only when
``TrainConfig.joint_backprop`` is set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import torch

from .allocation import allocate
from .channel import assemble_channels
from .config import ScenarioConfig, TrainConfig
from .dataset import ChannelDataset
from .estimator import (
    ChannelDecoder,
    ParametricEncoder,
    assemble_channel_torch,
    persistence_baseline,
    straight_through_quantize,
    to_complex,
)
from .metrics import cosine_similarity, nmse
from .quantizer import BitAllocation
from .util import chunked, to_db


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss becomes NaN or infinite."""

    def __init__(self, epoch: int, batch: int, recent_losses: list[float]) -> None:
        self.epoch = epoch
        self.batch = batch
        self.recent_losses = recent_losses
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch}; last finite losses: {recent_losses}"
        )


@dataclass
class TrainResult:
    allocation: BitAllocation
    encoder_loss: list[float] = field(default_factory=list)
    decoder_loss: list[float] = field(default_factory=list)


def nmse_loss(estimate: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Batch mean of ``||estimate - truth||_F^2 / ||truth||_F^2``."""
    error = torch.sum(torch.abs(estimate - truth) ** 2, dim=(-2, -1))
    energy = torch.sum(torch.abs(truth) ** 2, dim=(-2, -1))
    return torch.mean(error / energy)


def encoder_loss(encoder: ParametricEncoder, cfg: ScenarioConfig, history: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    params, _ = encoder(history)
    return nmse_loss(assemble_channel_torch(cfg, params), target)


def _tensors(dataset: ChannelDataset) -> tuple[torch.Tensor, torch.Tensor]:
    return (
        torch.as_tensor(dataset.history.astype(np.complex128)),
        torch.as_tensor(dataset.target.astype(np.complex128)),
    )


def train(
    dataset: ChannelDataset,
    encoder: ParametricEncoder,
    decoder: ChannelDecoder,
    cfg: ScenarioConfig,
    tc: TrainConfig,
) -> TrainResult:
    """Train ``encoder`` and ``decoder`` in place and return per-epoch mean losses."""
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    alloc = allocate(cfg, tc.total_bits, tc.allocation_method)
    history, target = _tensors(dataset)
    enc_opt = torch.optim.SGD(encoder.parameters(), lr=tc.learning_rate)
    dec_opt = torch.optim.SGD(decoder.parameters(), lr=tc.learning_rate)
    schedulers = [
        torch.optim.lr_scheduler.StepLR(opt, step_size=tc.decay_period, gamma=tc.decay_factor)
        for opt in (enc_opt, dec_opt)
    ]
    generator = torch.Generator().manual_seed(tc.seed)
    result = TrainResult(allocation=alloc)
    logging.info(
        "Training on %s samples for %s epochs with feedback bits %s",
        len(dataset),
        tc.epochs,
        alloc.as_tuple(),
    )
    encoder.train()
    decoder.train()
    recent: list[float] = []
    for epoch in range(1, tc.epochs + 1):
        order = torch.randperm(len(dataset), generator=generator).tolist()
        enc_losses, dec_losses = [], []
        for batch, idx in enumerate(chunked(order, tc.batch_size), start=1):
            params, _ = encoder(history[idx])
            loss_enc = nmse_loss(assemble_channel_torch(cfg, params), target[idx])
            fed_back = params if tc.joint_backprop else params.detach()
            maps, _ = decoder(straight_through_quantize(fed_back, alloc, encoder.upper))
            loss_dec = nmse_loss(to_complex(maps), target[idx])
            if not (torch.isfinite(loss_enc) and torch.isfinite(loss_dec)):
                raise TrainingDivergedError(epoch, batch, recent[-5:])

            enc_opt.zero_grad()
            dec_opt.zero_grad()
            (loss_enc + loss_dec).backward()
            enc_opt.step()
            dec_opt.step()

            enc_losses.append(loss_enc.item())
            dec_losses.append(loss_dec.item())
            recent.append(loss_enc.item() + loss_dec.item())
            logging.debug("epoch %s batch %s: encoder %.4g decoder %.4g", epoch, batch, enc_losses[-1], dec_losses[-1])
        for scheduler in schedulers:
            scheduler.step()
        result.encoder_loss.append(float(np.mean(enc_losses)))
        result.decoder_loss.append(float(np.mean(dec_losses)))
        logging.info(
            "Epoch %s/%s: encoder loss %.4g, decoder loss %.4g",
            epoch,
            tc.epochs,
            result.encoder_loss[-1],
            result.decoder_loss[-1],
        )
    encoder.eval()
    decoder.eval()
    return result


def gradient_check(
    encoder: ParametricEncoder,
    cfg: ScenarioConfig,
    dataset: ChannelDataset,
    eps: float = 1e-6,
) -> float:
    """Relative error between autograd and central-difference gradients of the encoder loss.

    Returns ``||g_fd - g_auto|| / ||g_auto||`` over all encoder weights.
    """
    history, target = _tensors(dataset)
    params = [p for p in encoder.parameters() if p.requires_grad]
    encoder.zero_grad()
    encoder_loss(encoder, cfg, history, target).backward()
    analytic = torch.cat([p.grad.reshape(-1) for p in params]).clone()

    numeric = []
    with torch.no_grad():
        for p in params:
            flat = p.view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + eps
                plus = encoder_loss(encoder, cfg, history, target).item()
                flat[i] = original - eps
                minus = encoder_loss(encoder, cfg, history, target).item()
                flat[i] = original
                numeric.append((plus - minus) / (2 * eps))
    numeric_t = torch.tensor(numeric, dtype=analytic.dtype)
    return float(torch.linalg.norm(numeric_t - analytic) / torch.linalg.norm(analytic))


@torch.no_grad()
def predict(
    dataset: ChannelDataset,
    encoder: ParametricEncoder,
    decoder: ChannelDecoder,
    alloc: BitAllocation,
    batch_size: int = 64,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the full chain on every sample.

    Returns the parameter estimates ``(n, L, 4)``, the reconstructed channels
    ``(n, N_f, N_t)`` and the encoder attention maps ``(n, N_h, w, w)``.
    """
    encoder.eval()
    decoder.eval()
    history, _ = _tensors(dataset)
    estimates, channels, maps = [], [], []
    for idx in chunked(range(len(dataset)), batch_size):
        params, attn = encoder(history[idx])
        out, _ = decoder(straight_through_quantize(params, alloc, encoder.upper))
        estimates.append(params.numpy())
        channels.append(to_complex(out).numpy())
        maps.append(attn.numpy())
    return np.concatenate(estimates), np.concatenate(channels), np.concatenate(maps)


def evaluate(
    dataset: ChannelDataset,
    encoder: ParametricEncoder,
    decoder: ChannelDecoder,
    cfg: ScenarioConfig,
    alloc: BitAllocation,
) -> tuple[dict, np.ndarray]:
    """Score the trained chain against the persistence baseline.

    Returns the metric dict and the encoder attention maps.
    """
    params, channels, maps = predict(dataset, encoder, decoder, alloc)
    intermediate = assemble_channels(cfg, params)
    report = {
        "n_samples": len(dataset),
        "feedback_bits": list(alloc.as_tuple()),
        "encoder_nmse_db": to_db(nmse(dataset.target, intermediate)),
        "nmse_db": to_db(nmse(dataset.target, channels)),
        "cosine_similarity": cosine_similarity(dataset.target, channels),
        "persistence_nmse_db": to_db(nmse(dataset.target, persistence_baseline(dataset.history))),
    }
    return report, maps


def attention_frame(maps: np.ndarray) -> pd.DataFrame:
    """Long-format table of ``(n, N_h, w, w)`` attention maps."""
    n, heads, w, _ = maps.shape
    sample, head, query, key = np.meshgrid(np.arange(n), np.arange(heads), np.arange(w), np.arange(w), indexing="ij")
    return pd.DataFrame(
        {
            "sample": sample.ravel(),
            "head": head.ravel(),
            "query_slot": query.ravel(),
            "key_slot": key.ravel(),
            "weight": maps.ravel(),
        }
    )
