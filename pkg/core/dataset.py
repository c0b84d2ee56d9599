"""Channel sequence datasets and their binary file format.

File layout (little-endian throughout):

  header:  b"CCSI1", then N_f, N_t, w, L and the sample count as uint32
  sample:  w + 1 channel matrices as interleaved float32 re/im pairs in
           subcarrier-major order (the last one is the prediction target),
           then the target parameters as 4L float64 values, path by path in
           the order theta, tau, beta, phi.

Sample ``i`` of a generated dataset is drawn from its own child of
``SeedSequence(seed)``, so any sample can be regenerated independently.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import channel_sequence
from .config import ScenarioConfig

MAGIC = b"CCSI1"
_HEADER = struct.Struct("<5I")
DEFAULT_SPLIT = (2000, 500, 500)


class DatasetFormatError(ValueError):
    """Raised when a dataset file is malformed or does not match the scenario."""


@dataclass(frozen=True, eq=False)
class ChannelDataset:
    history: np.ndarray  # (n, w, N_f, N_t) complex
    target: np.ndarray  # (n, N_f, N_t) complex
    target_params: np.ndarray  # (n, L, 4) float64

    def __post_init__(self) -> None:
        n = self.history.shape[0]
        if self.target.shape[0] != n or self.target_params.shape[0] != n:
            raise DatasetFormatError("history, target and parameters disagree on the sample count")

    def __len__(self) -> int:
        return int(self.history.shape[0])

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """``(N_f, N_t, w, L)``."""
        _, w, n_f, n_t = self.history.shape
        return n_f, n_t, w, self.target_params.shape[1]

    def subset(self, indices: np.ndarray | slice) -> "ChannelDataset":
        return ChannelDataset(self.history[indices], self.target[indices], self.target_params[indices])


def generate_dataset(cfg: ScenarioConfig, n_samples: int, seed: int | None = None) -> ChannelDataset:
    """Draw ``n_samples`` independent mobility sequences."""
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    seed = cfg.rng_seed if seed is None else seed
    children = np.random.SeedSequence(seed).spawn(n_samples)
    shape = (n_samples, cfg.window_len, cfg.n_subcarriers, cfg.n_tx)
    history = np.empty(shape, dtype=np.complex128)
    target = np.empty((n_samples, cfg.n_subcarriers, cfg.n_tx), dtype=np.complex128)
    params = np.empty((n_samples, cfg.n_paths, 4))
    for i, child in enumerate(children):
        seq = channel_sequence(cfg, np.random.default_rng(child))
        history[i], target[i], params[i] = seq.history, seq.target, seq.target_csi.as_matrix()
        if (i + 1) % 500 == 0:
            logging.info("Generated %s/%s sequences", i + 1, n_samples)
    return ChannelDataset(history, target, params)


def split_dataset(dataset: ChannelDataset, sizes: tuple[int, int, int] = DEFAULT_SPLIT) -> dict[str, ChannelDataset]:
    """Split into train/val/test keeping the proportions of ``sizes``."""
    if sum(sizes) <= 0 or min(sizes) < 0:
        raise ValueError(f"invalid split sizes {sizes}")
    n = len(dataset)
    bounds = np.floor(np.cumsum(sizes) / sum(sizes) * n).astype(int)
    start = 0
    out = {}
    for name, stop in zip(("train", "val", "test"), bounds):
        out[name] = dataset.subset(slice(start, int(stop)))
        start = int(stop)
    return out


def write_dataset(path: str | Path, dataset: ChannelDataset) -> None:
    path = Path(path)
    n_f, n_t, w, L = dataset.dims
    channels = np.concatenate([dataset.history, dataset.target[:, None]], axis=1).astype("<c8")
    params = dataset.target_params.astype("<f8")
    with path.open("wb") as fh:
        fh.write(MAGIC + _HEADER.pack(n_f, n_t, w, L, len(dataset)))
        for i in range(len(dataset)):
            fh.write(channels[i].tobytes())
            fh.write(params[i].tobytes())
    logging.info("Wrote %s samples to %s", len(dataset), path)


def read_dataset(path: str | Path, cfg: ScenarioConfig | None = None) -> ChannelDataset:
    """Load a dataset, optionally checking its dimensions against ``cfg``."""
    data = Path(path).read_bytes()
    head = len(MAGIC) + _HEADER.size
    if len(data) < head or data[: len(MAGIC)] != MAGIC:
        raise DatasetFormatError(f"{path} is not a channel dataset")
    n_f, n_t, w, L, count = _HEADER.unpack_from(data, len(MAGIC))
    if cfg is not None and (n_f, n_t, w, L) != (cfg.n_subcarriers, cfg.n_tx, cfg.window_len, cfg.n_paths):
        raise DatasetFormatError(
            f"{path} holds N_f={n_f}, N_t={n_t}, w={w}, L={L}, which does not match the scenario"
        )
    record = np.dtype([("channels", "<c8", (w + 1, n_f, n_t)), ("params", "<f8", (L, 4))])
    if len(data) != head + count * record.itemsize:
        raise DatasetFormatError(
            f"{path} should hold {count} samples of {record.itemsize} bytes, found {len(data) - head} bytes"
        )
    records = np.frombuffer(data, dtype=record, count=count, offset=head)
    channels = records["channels"].astype(np.complex128)
    return ChannelDataset(channels[:, :w], channels[:, w], records["params"].astype(np.float64))
