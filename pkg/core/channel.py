"""Geometric multipath MIMO-OFDM channel synthesis.

A channel between an ``N_t``-antenna uniform linear array and a single-antenna
UE over ``N_f`` subcarriers is fully described by ``L`` paths, each carrying an
angle of departure, a delay, a path loss and a phase. This module samples such
parametric CSI, assembles the frequency-domain channel matrix from it and
evolves it under UE motion to build prediction sequences.

Row ``s`` of a channel matrix is ``h[s]^H`` where
``h[s] = sum_l beta_l exp(j(phi_l - 2 pi f_s tau_l)) a_t(theta_l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig

TWO_PI = 2.0 * math.pi

# Column order of the L x 4 parameter matrix.
PARAMETERS = ("theta", "tau", "beta", "phi")


def subcarrier_frequency(cfg: ScenarioConfig, s: int) -> float:
    """Frequency in Hz of subcarrier ``s`` (1-based)."""
    if not 1 <= s <= cfg.n_subcarriers:
        raise ValueError(f"subcarrier index must lie in [1, {cfg.n_subcarriers}], got {s}")
    return cfg.carrier_freq_hz - cfg.bandwidth_hz / 2 + cfg.bandwidth_hz / cfg.n_subcarriers * (s - 1)


def subcarrier_frequencies(cfg: ScenarioConfig) -> np.ndarray:
    s = np.arange(cfg.n_subcarriers)
    return cfg.carrier_freq_hz - cfg.bandwidth_hz / 2 + cfg.bandwidth_hz / cfg.n_subcarriers * s


def steering_vector(cfg: ScenarioConfig, theta: float | np.ndarray) -> np.ndarray:
    """Array response ``a_t(theta)``; a trailing axis of length ``N_t`` is appended."""
    n = np.arange(cfg.n_tx)
    phase = TWO_PI * cfg.antenna_spacing_m * np.sin(np.asarray(theta))[..., None] / cfg.wavelength_m
    return np.exp(-1j * n * phase)


def delay_phase_vector(cfg: ScenarioConfig, tau: float | np.ndarray) -> np.ndarray:
    """Subcarrier phase ramp ``a_f(tau)``; a trailing axis of length ``N_f`` is appended."""
    tau = np.asarray(tau)
    if np.any(tau < 0):
        raise ValueError("delay must be non-negative")
    return np.exp(1j * TWO_PI * tau[..., None] * subcarrier_frequencies(cfg))


@dataclass(frozen=True, eq=False)
class ParametricCsi:
    """Per-path geometric parameters of one channel realisation."""

    aod_rad: np.ndarray
    delay_s: np.ndarray
    path_loss: np.ndarray
    phase_rad: np.ndarray

    def __post_init__(self) -> None:
        columns = [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in self._values()]
        if len({c.shape for c in columns}) != 1 or columns[0].ndim != 1:
            raise ValueError("all parameter vectors must be 1-D with one entry per path")
        for name, column in zip(("aod_rad", "delay_s", "path_loss", "phase_rad"), columns):
            object.__setattr__(self, name, column)

    def _values(self) -> tuple:
        return (self.aod_rad, self.delay_s, self.path_loss, self.phase_rad)

    @property
    def n_paths(self) -> int:
        return int(self.aod_rad.shape[0])

    @property
    def complex_gain(self) -> np.ndarray:
        return self.path_loss * np.exp(1j * self.phase_rad)

    def as_matrix(self) -> np.ndarray:
        """Return the ``L x 4`` matrix with columns theta, tau, beta, phi."""
        return np.stack(self._values(), axis=-1)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "ParametricCsi":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != 4:
            raise ValueError(f"expected an L x 4 matrix, got shape {matrix.shape}")
        return cls(*(matrix[:, k].copy() for k in range(4)))

    def validate(self, cfg: ScenarioConfig) -> None:
        """Raise ``ValueError`` unless every parameter lies in its declared range."""
        if self.n_paths != cfg.n_paths:
            raise ValueError(f"expected {cfg.n_paths} paths, got {self.n_paths}")
        checks = (
            ("aod_rad", self.aod_rad, 0.0, TWO_PI, False),
            ("delay_s", self.delay_s, 0.0, cfg.tau_max_s, True),
            ("path_loss", self.path_loss, 0.0, cfg.beta_max, True),
            ("phase_rad", self.phase_rad, 0.0, TWO_PI, False),
        )
        for name, values, low, high, closed in checks:
            upper_ok = values <= high if closed else values < high
            if not np.all((values >= low) & upper_ok):
                raise ValueError(f"{name} out of range: {values}")


@dataclass(frozen=True)
class UeState:
    """UE position in the BS-centric plane and its heading."""

    x_m: float
    y_m: float
    heading_rad: float

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise ValueError("UE must not sit at the BS position")

    @property
    def distance_m(self) -> float:
        return math.hypot(self.x_m, self.y_m)


def assemble_channel(cfg: ScenarioConfig, csi: ParametricCsi) -> np.ndarray:
    """Assemble ``H = A_f(tau) diag(beta) diag(exp(-j phi)) A_t(theta)^H``."""
    a_f = delay_phase_vector(cfg, csi.delay_s).T  # N_f x L
    a_t = steering_vector(cfg, csi.aod_rad).T  # N_t x L
    gains = csi.path_loss * np.exp(-1j * csi.phase_rad)
    return (a_f * gains) @ a_t.conj().T


def assemble_channels(cfg: ScenarioConfig, params: np.ndarray) -> np.ndarray:
    """Batched :func:`assemble_channel` over ``(..., L, 4)`` parameter matrices."""
    params = np.asarray(params, dtype=np.float64)
    theta, tau, beta, phi = (params[..., k] for k in range(4))
    a_f = np.exp(1j * TWO_PI * tau[..., None, :] * subcarrier_frequencies(cfg)[:, None])
    a_t = steering_vector(cfg, theta)  # (..., L, N_t)
    gains = beta * np.exp(-1j * phi)
    return np.einsum("...sl,...l,...ln->...sn", a_f, gains, a_t.conj())


def channel_vector(cfg: ScenarioConfig, csi: ParametricCsi, s: int) -> np.ndarray:
    """Per-subcarrier channel ``h[s]`` (1-based ``s``) summed path by path."""
    f_s = subcarrier_frequency(cfg, s)
    h = np.zeros(cfg.n_tx, dtype=np.complex128)
    for theta, tau, beta, phi in csi.as_matrix():
        h += beta * np.exp(1j * (phi - TWO_PI * f_s * tau)) * steering_vector(cfg, theta)
    return h


def sample_parametric_csi(cfg: ScenarioConfig, rng: np.random.Generator) -> ParametricCsi:
    return ParametricCsi.from_matrix(sample_parametric_csi_batch(cfg, rng, 1)[0])


def sample_parametric_csi_batch(cfg: ScenarioConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` independent ``L x 4`` parameter matrices."""
    shape = (count, cfg.n_paths)
    theta = rng.uniform(0.0, TWO_PI, shape)
    tau = rng.uniform(0.0, cfg.tau_max_s, shape)
    beta = rng.uniform(0.0, cfg.beta_scale * cfg.beta_max, shape)
    phi = rng.uniform(0.0, TWO_PI, shape)
    return np.stack([theta, tau, beta, phi], axis=-1)


def evolve_ue(state: UeState, cfg: ScenarioConfig, dt: float) -> tuple[UeState, float, float]:
    """Advance the UE by ``v * dt`` along its heading.

    Returns the new state with the angle variation ``atan(v dt / r)`` and the
    delay variation ``(sqrt(r^2 + (v dt)^2) - r) / c`` seen from the old
    position.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    step = cfg.ue_speed_mps * dt
    r = state.distance_m
    delta_theta = math.atan(step / r)
    delta_tau = (math.hypot(r, step) - r) / SPEED_OF_LIGHT
    moved = UeState(
        x_m=state.x_m + step * math.cos(state.heading_rad),
        y_m=state.y_m + step * math.sin(state.heading_rad),
        heading_rad=state.heading_rad,
    )
    return moved, delta_theta, delta_tau


class ChannelSequence(NamedTuple):
    history: np.ndarray  # (w, N_f, N_t)
    target: np.ndarray  # (N_f, N_t)
    target_csi: ParametricCsi
    trajectory: list[ParametricCsi]  # w + 1 entries, the last one is the target


def _drift_sign(state: UeState) -> float:
    # Sign of the angular velocity seen from the BS.
    vx, vy = math.cos(state.heading_rad), math.sin(state.heading_rad)
    return float(np.sign(state.x_m * vy - state.y_m * vx))


def channel_sequence(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSequence:
    """Draw a channel and roll it forward ``w`` slots under UE mobility.

    Path 0 is the line-of-sight path: the UE starts at its angle and its
    angular drift follows the true geometry. The remaining paths drift by the
    same magnitude with random signs fixed for the whole sequence.
    """
    if cfg.window_len < 1:
        raise ValueError("window_len must be >= 1 to build a prediction sequence")
    params = sample_parametric_csi_batch(cfg, rng, 1)[0]
    distance = rng.uniform(cfg.min_distance_m, cfg.max_distance_m)
    los = params[0, 0]
    state = UeState(distance * math.cos(los), distance * math.sin(los), rng.uniform(0.0, TWO_PI))
    signs = np.concatenate([[0.0], rng.choice([-1.0, 1.0], size=cfg.n_paths - 1)])

    trajectory = [ParametricCsi.from_matrix(params)]
    for _ in range(cfg.window_len):
        signs[0] = _drift_sign(state)
        moved, d_theta, d_tau = evolve_ue(state, cfg, cfg.slot_period_s)
        params = params.copy()
        params[:, 0] = np.mod(params[:, 0] + signs * d_theta, TWO_PI)
        params[:, 1] = np.clip(params[:, 1] + d_tau, 0.0, cfg.tau_max_s)
        params[:, 2] = np.clip(params[:, 2] * state.distance_m / moved.distance_m, 0.0, cfg.beta_max)
        params[:, 3] = np.mod(params[:, 3] - TWO_PI * cfg.carrier_freq_hz * d_tau, TWO_PI)
        trajectory.append(ParametricCsi.from_matrix(params))
        state = moved

    channels = assemble_channels(cfg, np.stack([c.as_matrix() for c in trajectory]))
    return ChannelSequence(channels[:-1], channels[-1], trajectory[-1], trajectory)
