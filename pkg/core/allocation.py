"""Feedback-bit allocation across the four parametric CSI components.

The expected squared-Frobenius reconstruction error caused by quantizing
each parameter type decays as ``4**-Q_x`` in that parameter's bit count:
``C_x = a_x * 4**-Q_x``. Minimising ``sum_x C_x`` under ``sum_x Q_x = Q`` is
solved three ways here: by equalising the four terms (the real-valued
optimum), by the closed-form expressions ``Q/4 + log2(k_x)/8`` and by
exhaustive search over integer splits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .channel import subcarrier_frequencies
from .config import ScenarioConfig
from .quantizer import BitAllocation

BRUTE_FORCE_MAX_BITS = 64
METHODS = ("closed", "brute", "equalize", "uniform")


@dataclass(frozen=True)
class DistortionTerms:
    c_theta: float
    c_tau: float
    c_beta: float
    c_phi: float

    @property
    def total(self) -> float:
        return self.c_theta + self.c_tau + self.c_beta + self.c_phi

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.c_theta, self.c_tau, self.c_beta, self.c_phi)


@dataclass(frozen=True)
class ClosedFormAllocation:
    real_bits: np.ndarray  # before rounding, may be negative
    allocation: BitAllocation


def frequency_moment(cfg: ScenarioConfig) -> float:
    """``sum_s f_s**2`` over all subcarriers."""
    return float(np.sum(subcarrier_frequencies(cfg) ** 2))


def term_constants(cfg: ScenarioConfig) -> np.ndarray:
    """Prefactors ``a_x`` such that ``C_x = a_x * 4**-Q_x``, ordered theta, tau, beta, phi."""
    L, n_f, n_t = cfg.n_paths, cfg.n_subcarriers, cfg.n_tx
    d, lam, beta2 = cfg.antenna_spacing_m, cfg.wavelength_m, cfg.beta_max**2
    pi = math.pi
    return np.array(
        [
            pi**4 * d**2 * L * n_f * n_t * (n_t - 1) * beta2 / (36 * lam**2),
            pi**2 * L * n_t * cfg.tau_max_s**2 * beta2 * frequency_moment(cfg) / 36,
            L * n_f * n_t * beta2 / 12,
            pi**2 * L * n_f * n_t * beta2 / 36,
        ]
    )


def _terms(constants: np.ndarray, bits: np.ndarray) -> np.ndarray:
    return constants * 4.0 ** -np.asarray(bits, dtype=np.float64)


def distortion_terms(cfg: ScenarioConfig, alloc: BitAllocation) -> DistortionTerms:
    return DistortionTerms(*_terms(term_constants(cfg), alloc.as_tuple()).tolist())


def objective(cfg: ScenarioConfig, alloc: BitAllocation) -> float:
    return distortion_terms(cfg, alloc).total


def count_combinations(total_bits: int) -> int:
    """Number of ways to split ``total_bits`` into four non-negative parts."""
    if total_bits < 0:
        raise ValueError("total_bits must be non-negative")
    return math.comb(total_bits + 3, 3)


def multichoose_count(total_bits: int, k: int = 4) -> int:
    """Multisets of size ``k`` drawn from ``total_bits`` items, ``C(Q + k - 1, k)``."""
    if total_bits < 0 or k < 0:
        raise ValueError("total_bits and k must be non-negative")
    return math.comb(total_bits + k - 1, k)


def enumerate_allocations(total_bits: int) -> np.ndarray:
    """All integer 4-splits of ``total_bits`` in lexicographic order, shape (n, 4)."""
    if total_bits < 0:
        raise ValueError("total_bits must be non-negative")
    rows = [
        (t, u, b, total_bits - t - u - b)
        for t in range(total_bits + 1)
        for u in range(total_bits - t + 1)
        for b in range(total_bits - t - u + 1)
    ]
    return np.array(rows, dtype=np.int64)


def brute_force_allocation(cfg: ScenarioConfig, total_bits: int) -> BitAllocation:
    """Exhaustive search; the first minimiser in lexicographic order wins."""
    if total_bits > BRUTE_FORCE_MAX_BITS:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_MAX_BITS} bits, got {total_bits}")
    candidates = enumerate_allocations(total_bits)
    values = _terms(term_constants(cfg), candidates).sum(axis=1)
    best = int(np.argmin(values))
    logging.debug("Brute force visited %s candidates for Q=%s", len(candidates), total_bits)
    return BitAllocation(*candidates[best].tolist())


def equalization_allocation(cfg: ScenarioConfig, total_bits: float) -> np.ndarray:
    """Real-valued bits making all four terms equal while summing to ``total_bits``.

    Parameters whose prefactor vanishes (e.g. ``N_t = 1`` for the angle) get
    zero bits and the rest are equalised among themselves.
    """
    if total_bits < 4:
        raise ValueError(f"total_bits must be >= 4, got {total_bits}")
    constants = term_constants(cfg)
    active = constants > 0
    bits = np.zeros(4)
    logs = np.log2(constants[active])
    bits[active] = total_bits / active.sum() + 0.5 * (logs - logs.mean())
    return bits


def repaired_offsets(cfg: ScenarioConfig) -> np.ndarray:
    """Closed-form offsets ``Q_x - Q/4`` from the AM-GM equality conditions."""
    return 0.125 * np.log2(_closed_form_constants(cfg, printed=False))


def printed_offsets(cfg: ScenarioConfig) -> np.ndarray:
    """Closed-form offsets as commonly typeset.

    The angle form drops the ``N_f`` factor and the path-loss form uses the
    first frequency moment where the second belongs; they are kept to quantify
    how far that rendering is from the optimum.
    """
    return 0.125 * np.log2(_closed_form_constants(cfg, printed=True))


def _closed_form_constants(cfg: ScenarioConfig, printed: bool) -> np.ndarray:
    n_f, n_t = cfg.n_subcarriers, cfg.n_tx
    d, lam, tau = cfg.antenna_spacing_m, cfg.wavelength_m, cfg.tau_max_s
    pi = math.pi
    freqs = subcarrier_frequencies(cfg)
    m2 = float(np.sum(freqs**2))
    m_beta = float(np.sum(freqs)) if printed else m2
    n_f_theta = 1 if printed else n_f
    if n_t == 1:
        raise ValueError("closed-form allocation needs n_tx >= 2")
    return np.array(
        [
            pi**8 * d**6 * n_f_theta * (n_t - 1) ** 3 / (3 * lam**6 * tau**2 * m2),
            lam**2 * tau**6 * m2**3 / (3 * d**2 * n_f**3 * (n_t - 1)),
            27 * lam**2 * n_f / (pi**8 * d**2 * (n_t - 1) * tau**2 * m_beta),
            lam**2 * n_f / (3 * d**2 * (n_t - 1) * tau**2 * m2),
        ]
    )


def project_to_budget(real_bits: np.ndarray, total_bits: int) -> np.ndarray:
    """Shift ``real_bits`` uniformly so they are non-negative and sum to ``total_bits``.

    Parameters pushed below zero are pinned at zero and the shift is
    recomputed over the remaining ones.
    """
    real_bits = np.asarray(real_bits, dtype=np.float64)
    if total_bits == 0:
        return np.zeros_like(real_bits)

    def excess(shift: float) -> float:
        return float(np.maximum(real_bits + shift, 0.0).sum() - total_bits)

    shift = brentq(excess, -real_bits.max(), total_bits - real_bits.min())
    active = real_bits + shift > 0
    exact = (total_bits - real_bits[active].sum()) / active.sum()
    return np.where(active, np.maximum(real_bits + exact, 0.0), 0.0)


def round_allocation(real_bits: np.ndarray, total_bits: int) -> BitAllocation:
    """Largest-remainder rounding of a real allocation, preserving ``total_bits``.

    Ties go to theta, tau, beta, phi in that order.
    """
    projected = project_to_budget(real_bits, total_bits)
    floors = np.floor(projected).astype(np.int64)
    leftover = total_bits - int(floors.sum())
    remainders = projected - floors
    order = sorted(range(4), key=lambda k: (-round(remainders[k], 9), k))
    for k in order[: max(leftover, 0)]:
        floors[k] += 1
    return BitAllocation(*floors.tolist())


def closed_form_allocation(
    cfg: ScenarioConfig,
    total_bits: int,
    variant: Literal["repaired", "printed"] = "repaired",
) -> ClosedFormAllocation:
    """Evaluate ``Q/4 + offset_x`` and round it to a valid integer allocation."""
    if total_bits < 4:
        raise ValueError(f"total_bits must be >= 4, got {total_bits}")
    if variant == "repaired":
        offsets = repaired_offsets(cfg)
    elif variant == "printed":
        offsets = printed_offsets(cfg)
    else:
        raise ValueError(f"unknown closed-form variant {variant!r}")
    real = total_bits / 4 + offsets
    return ClosedFormAllocation(real_bits=real, allocation=round_allocation(real, total_bits))


def uniform_allocation(total_bits: int) -> BitAllocation:
    return BitAllocation.uniform(total_bits)


def allocate(cfg: ScenarioConfig, total_bits: int, method: str = "closed") -> BitAllocation:
    """Dispatch to one of :data:`METHODS`."""
    if method == "closed":
        return closed_form_allocation(cfg, total_bits).allocation
    if method == "brute":
        return brute_force_allocation(cfg, total_bits)
    if method == "equalize":
        return round_allocation(equalization_allocation(cfg, total_bits), total_bits)
    if method == "uniform":
        return uniform_allocation(total_bits)
    raise ValueError(f"unknown allocation method {method!r}; choose from {', '.join(METHODS)}")
