"""Utility functions for the parametric CSI feedback simulator.

This module provides helper functions such as chunking iterables into
batches for Monte Carlo and training loops, decibel conversion with a
portable ``-inf`` sentinel, and hashing/versioning helpers for run
manifests.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
from pathlib import Path
from typing import Any, Iterable, Iterator, TypeVar

import numpy as np

from . import __version__

T = TypeVar("T")


def chunked(sequence: Iterable[T], size: int) -> Iterator[list[T]]:
    """Yield successive chunks of a given size from the input sequence.

    Example:

        >>> list(chunked([1, 2, 3, 4, 5], 2))
        [[1, 2], [3, 4], [5]]

    Args:
        sequence: The iterable to partition.
        size: Maximum length of each chunk. Must be positive.
    Yields:
        Lists of up to ``size`` elements from ``sequence``.
    """
    if size <= 0:
        raise ValueError("size must be positive")
    chunk: list[T] = []
    for item in sequence:
        chunk.append(item)
        if len(chunk) == size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def to_db(value: float) -> float:
    """Convert a non-negative linear power ratio to dB (``0 -> -inf``)."""
    if value < 0:
        raise ValueError(f"power ratio must be non-negative, got {value}")
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


def from_db(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def format_db(value_db: float) -> str:
    """Format a dB value for CSV output, writing infinities as ``-inf``/``inf``."""
    if math.isinf(value_db):
        return "-inf" if value_db < 0 else "inf"
    return f"{value_db:.6f}"


def to_jsonable(obj: Any) -> Any:
    """``json.dumps`` fallback for numpy scalars/arrays and paths."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")


def dumps(obj: Any, **kwargs: Any) -> str:
    return json.dumps(obj, default=to_jsonable, **kwargs)


def config_hash(obj: Any) -> str:
    """Return the SHA-256 of the canonical JSON encoding of ``obj``."""
    payload = json.dumps(obj, default=to_jsonable, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def version_string() -> str:
    """Return ``git describe`` output for the source tree, or the package version."""
    root = Path(__file__).resolve().parent.parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=root,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    described = out.stdout.strip()
    return f"{__version__}+{described}" if described else __version__
