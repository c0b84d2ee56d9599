"""First-order perturbation analysis of the parametric channel.

Analytic Jacobians of ``h[s]`` with respect to every path parameter, a
linearised distortion model built from them, finite-difference oracles and a
Monte Carlo estimator of the per-parameter quantization distortion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channel import (
    TWO_PI,
    ParametricCsi,
    assemble_channels,
    sample_parametric_csi_batch,
    steering_vector,
    subcarrier_frequencies,
    subcarrier_frequency,
)
from .config import ScenarioConfig
from .quantizer import BitAllocation, build_codebooks, dequantize_matrix, quantize_matrix
from .util import chunked

TERMS = ("c_theta", "c_tau", "c_beta", "c_phi")


@dataclass(frozen=True, eq=False)
class JacobianSet:
    """Jacobians of ``h[s]`` for one subcarrier, each ``N_t x L``."""

    subcarrier: int
    theta: np.ndarray
    tau: np.ndarray
    beta: np.ndarray
    phi: np.ndarray

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.theta, self.tau, self.beta, self.phi)


@dataclass(frozen=True)
class DistortionEstimate:
    """Per-term sample means with their standard errors."""

    means: dict[str, float]
    std_errors: dict[str, float]
    n_samples: int

    def as_dict(self) -> dict:
        return {"means": self.means, "std_errors": self.std_errors, "n_samples": self.n_samples}


def index_ramp(n_tx: int) -> np.ndarray:
    return np.arange(n_tx, dtype=np.float64)


def path_phasors(cfg: ScenarioConfig, csi: ParametricCsi, s: int) -> np.ndarray:
    """``exp(j(phi_l - 2 pi f_s tau_l))`` for every path."""
    f_s = subcarrier_frequency(cfg, s)
    return np.exp(1j * (csi.phase_rad - TWO_PI * f_s * csi.delay_s))


def coefficient_matrices(cfg: ScenarioConfig, csi: ParametricCsi, s: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``R_theta``, ``R_tau[s]`` and ``R_phi``, each ``N_t x L``."""
    n = index_ramp(cfg.n_tx)
    ones = np.ones((cfg.n_tx, csi.n_paths))
    r_theta = -1j * TWO_PI * cfg.antenna_spacing_m / cfg.wavelength_m * np.outer(n, np.cos(csi.aod_rad))
    r_tau = -1j * TWO_PI * subcarrier_frequency(cfg, s) * ones
    r_phi = 1j * ones
    return r_theta, r_tau, r_phi


def analytic_jacobians(cfg: ScenarioConfig, csi: ParametricCsi, s: int) -> JacobianSet:
    a_t = steering_vector(cfg, csi.aod_rad).T  # N_t x L
    phasors = path_phasors(cfg, csi, s)
    r_theta, r_tau, r_phi = coefficient_matrices(cfg, csi, s)
    weighted = phasors * csi.path_loss
    return JacobianSet(
        subcarrier=s,
        theta=r_theta * a_t * weighted,
        tau=r_tau * a_t * weighted,
        beta=a_t * phasors,
        phi=r_phi * a_t * weighted,
    )


def first_order_delta_h(
    cfg: ScenarioConfig,
    csi: ParametricCsi,
    deltas: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    s: int,
) -> np.ndarray:
    """Linear prediction of ``h[s]`` changing when the parameters move by ``deltas``."""
    jac = analytic_jacobians(cfg, csi, s)
    return sum(j @ np.asarray(d, dtype=np.float64) for j, d in zip(jac.as_tuple(), deltas))


def _h_all(cfg: ScenarioConfig, params: np.ndarray) -> np.ndarray:
    # h[s] for all s, shape (N_f, N_t); rows of H are h[s]^H.
    return assemble_channels(cfg, params).conj()


def fd_steps(cfg: ScenarioConfig) -> np.ndarray:
    """Central-difference steps for theta, tau, beta and phi."""
    return np.array([1e-7, 1e-8 * cfg.tau_max_s, 1e-7 * cfg.beta_max, 1e-7])


def finite_difference_jacobians(cfg: ScenarioConfig, csi: ParametricCsi) -> np.ndarray:
    """Central differences of ``h[s]`` for all subcarriers.

    Returns shape ``(4, N_f, N_t, L)`` in the order theta, tau, beta, phi.
    """
    base = csi.as_matrix()
    steps = fd_steps(cfg)
    out = np.empty((4, cfg.n_subcarriers, cfg.n_tx, csi.n_paths), dtype=np.complex128)
    for k in range(4):
        for l in range(csi.n_paths):
            plus, minus = base.copy(), base.copy()
            plus[l, k] += steps[k]
            minus[l, k] -= steps[k]
            out[k, :, :, l] = (_h_all(cfg, plus) - _h_all(cfg, minus)) / (2 * steps[k])
    return out


def analytic_jacobian_tensor(cfg: ScenarioConfig, csi: ParametricCsi) -> np.ndarray:
    """:func:`analytic_jacobians` stacked over subcarriers, shape ``(4, N_f, N_t, L)``."""
    per_s = [analytic_jacobians(cfg, csi, s).as_tuple() for s in range(1, cfg.n_subcarriers + 1)]
    return np.stack([np.stack([j[k] for j in per_s]) for k in range(4)])


def linearization_residual(
    cfg: ScenarioConfig,
    csi: ParametricCsi,
    deltas: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
) -> float:
    """Frobenius norm of ``h(p + delta) - h(p) - J delta`` over all subcarriers."""
    perturbed = csi.as_matrix() + np.stack(deltas, axis=-1)
    actual = _h_all(cfg, perturbed) - _h_all(cfg, csi.as_matrix())
    predicted = np.stack(
        [first_order_delta_h(cfg, csi, deltas, s) for s in range(1, cfg.n_subcarriers + 1)]
    )
    return float(np.linalg.norm(actual - predicted))


def half_steps(cfg: ScenarioConfig, alloc: BitAllocation) -> np.ndarray:
    """Half the grid step of each codebook, i.e. the distortion bound."""
    books = build_codebooks(cfg, alloc)
    return np.array(books.steps) / 2


def _linearized_terms(cfg: ScenarioConfig, params: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Per-sample ``sum_s ||J_x[s] delta_x||^2`` for each term plus the joint total.

    ``params`` and ``deltas`` have shape ``(c, L, 4)``; returns ``(c, 5)``.
    """
    theta, tau, beta, phi = (params[..., k] for k in range(4))
    freqs = subcarrier_frequencies(cfg)
    a_t = np.swapaxes(steering_vector(cfg, theta), -1, -2)  # (c, N_t, L)
    n = index_ramp(cfg.n_tx)[None, :, None]
    phasors = np.exp(1j * (phi[:, None, :] - TWO_PI * freqs[None, :, None] * tau[:, None, :]))  # (c, N_f, L)
    weighted = beta[:, None, :] * phasors

    kappa = TWO_PI * cfg.antenna_spacing_m / cfg.wavelength_m
    m_theta = -1j * kappa * n * np.cos(theta)[:, None, :] * a_t
    pieces = [
        (m_theta, weighted * deltas[:, None, :, 0]),
        (a_t, -1j * TWO_PI * freqs[None, :, None] * weighted * deltas[:, None, :, 1]),
        (a_t, phasors * deltas[:, None, :, 2]),
        (a_t, 1j * weighted * deltas[:, None, :, 3]),
    ]
    vectors = [np.einsum("cnl,csl->csn", m, w) for m, w in pieces]
    energies = [np.sum(np.abs(v) ** 2, axis=(1, 2)) for v in vectors]
    energies.append(np.sum(np.abs(sum(vectors)) ** 2, axis=(1, 2)))
    return np.stack(energies, axis=-1)


def exact_distortion(cfg: ScenarioConfig, params: np.ndarray, alloc: BitAllocation) -> np.ndarray:
    """Per-sample ``||H(p) - H(p_hat)||_F^2`` quantizing one parameter at a time, then all.

    Returns shape ``(c, 5)`` for ``(c, L, 4)`` parameters.
    """
    books = build_codebooks(cfg, alloc)
    quantized = dequantize_matrix(quantize_matrix(params, books), books)
    truth = assemble_channels(cfg, params)
    energies = []
    for k in range(4):
        single = params.copy()
        single[..., k] = quantized[..., k]
        energies.append(np.sum(np.abs(assemble_channels(cfg, single) - truth) ** 2, axis=(1, 2)))
    energies.append(np.sum(np.abs(assemble_channels(cfg, quantized) - truth) ** 2, axis=(1, 2)))
    return np.stack(energies, axis=-1)


def monte_carlo_distortion(
    cfg: ScenarioConfig,
    alloc: BitAllocation,
    n_samples: int,
    rng: np.random.Generator,
    mode: Literal["linearized", "exact"] = "linearized",
    chunk_size: int = 2048,
) -> DistortionEstimate:
    """Estimate the four distortion terms and their joint total.

    ``linearized`` draws each distortion uniformly within its half step and
    pushes it through the Jacobians. ``exact`` quantizes the sampled
    parameters and measures the actual channel error, one parameter at a time
    for the per-term values and all at once for the total.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if mode not in ("linearized", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    bounds = half_steps(cfg, alloc)
    parts = []
    for chunk in chunked(range(n_samples), chunk_size):
        params = sample_parametric_csi_batch(cfg, rng, len(chunk))
        if mode == "linearized":
            unit = rng.uniform(-1.0, 1.0, params.shape)
            parts.append(_linearized_terms(cfg, params, unit * bounds))
        else:
            parts.append(exact_distortion(cfg, params, alloc))
        logging.debug("Monte Carlo chunk of %s samples done", len(chunk))
    samples = np.concatenate(parts)
    means = samples.mean(axis=0)
    errors = samples.std(axis=0, ddof=1) / np.sqrt(n_samples) if n_samples > 1 else np.zeros(5)
    names = TERMS + ("total",)
    return DistortionEstimate(
        means=dict(zip(names, means.tolist())),
        std_errors=dict(zip(names, errors.tolist())),
        n_samples=n_samples,
    )
