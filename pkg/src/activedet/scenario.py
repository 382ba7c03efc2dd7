"""Random-access scenario synthesis.

One cell of radius ``R`` with ``N`` uniformly placed devices, each active
with probability ``p_a``, plus an out-of-cell field of interferers drawn
from a thinned Poisson point process on the annulus ``(R, f R]``. All
channels are i.i.d. circularly symmetric complex Gaussian, pilots likewise,
pathloss is ``distance ** -alpha``. The received pilot-domain signal is

    Y = P diag(a * sqrt(g)) H + P_int diag(sqrt(g_int)) H_int + Z

with ``Z`` white noise of per-entry variance ``noise_var``, and the
sufficient statistic downstream is the sample covariance ``Y Y^H / M``.

Draw order from a given generator is fixed (positions, activities,
interferer count, interferer distances; then pilots; then channels and
noise), so a seed pins down the whole realization.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .validation import as_complex_matrix, hermitize


@dataclass(frozen=True)
class ScenarioConfig:
    """Cell geometry, traffic, and signal dimensions.

    ``noise_var`` defaults to ``cell_radius ** -pathloss_exponent / 10``
    (one tenth of the edge-of-cell pathloss) when not given explicitly.
    """

    n_devices: int = 200
    cell_radius: float = 80.0
    interferer_density: float = 0.01
    activity_prob: float = 0.05
    pathloss_exponent: float = 3.0
    pilot_length: int = 28
    n_antennas: int = 24
    noise_var: float | None = None
    ppp_truncation_factor: float = 50.0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n_devices) < 1:
            raise ConfigurationError(f"n_devices must be >= 1, got {self.n_devices}")
        if not self.cell_radius > 0:
            raise ConfigurationError(f"cell_radius must be positive, got {self.cell_radius}")
        if self.interferer_density < 0:
            raise ConfigurationError(
                f"interferer_density must be nonnegative, got {self.interferer_density}"
            )
        if not 0 < self.activity_prob <= 1:
            raise ConfigurationError(
                f"activity_prob must lie in (0, 1], got {self.activity_prob}"
            )
        if not self.pathloss_exponent > 2:
            raise ConfigurationError(
                f"pathloss_exponent must exceed 2, got {self.pathloss_exponent}"
            )
        if int(self.pilot_length) < 1:
            raise ConfigurationError(f"pilot_length must be >= 1, got {self.pilot_length}")
        if int(self.n_antennas) < 1:
            raise ConfigurationError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if self.noise_var is None:
            object.__setattr__(
                self, "noise_var", self.cell_radius ** -self.pathloss_exponent / 10.0
            )
        if not self.noise_var > 0:
            raise ConfigurationError(f"noise_var must be positive, got {self.noise_var}")
        if not self.ppp_truncation_factor > 1:
            raise ConfigurationError(
                f"ppp_truncation_factor must exceed 1, got {self.ppp_truncation_factor}"
            )

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with fields replaced (re-validated)."""
        return dataclasses.replace(self, **changes)


@dataclass
class NetworkRealization:
    """Positions and activity of one network draw.

    ``pathloss`` and ``activity`` cover the in-cell devices; the interferer
    arrays cover the active out-of-cell devices only (already thinned).
    """

    pathloss: np.ndarray
    activity: np.ndarray
    interferer_distances: np.ndarray
    interferer_pathloss: np.ndarray

    @property
    def n_devices(self) -> int:
        return self.pathloss.shape[0]

    @property
    def n_interferers(self) -> int:
        return self.interferer_distances.shape[0]


@dataclass
class PilotSet:
    """Unit-variance complex Gaussian pilot matrices, one column per device."""

    in_cell: np.ndarray
    interferer: np.ndarray


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian draws, per-entry variance ``var``."""
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_network(config: ScenarioConfig, rng: np.random.Generator) -> NetworkRealization:
    """Draw device positions, activities, and the active interferer field.

    In-cell distances follow the uniform-in-area law ``r = R sqrt(U)``; the
    interferer count is Poisson with mean
    ``density * activity_prob * pi * ((f R)^2 - R^2)`` and interferer
    positions are uniform in area on the annulus.
    """
    n = config.n_devices
    radius = config.cell_radius
    alpha = config.pathloss_exponent

    distances = radius * np.sqrt(rng.random(n))
    pathloss = distances ** -alpha
    activity = (rng.random(n) < config.activity_prob).astype(np.int8)

    outer = config.ppp_truncation_factor * radius
    mean_count = (
        config.interferer_density * config.activity_prob * math.pi * (outer ** 2 - radius ** 2)
    )
    count = int(rng.poisson(mean_count))
    interferer_distances = np.sqrt(
        radius ** 2 + rng.random(count) * (outer ** 2 - radius ** 2)
    )
    interferer_pathloss = interferer_distances ** -alpha
    return NetworkRealization(pathloss, activity, interferer_distances, interferer_pathloss)


def sample_pilots(
    config: ScenarioConfig, n_interferers: int, rng: np.random.Generator
) -> PilotSet:
    """Draw fresh unit-variance pilots for in-cell devices and interferers."""
    length = config.pilot_length
    in_cell = complex_normal(rng, (length, config.n_devices))
    interferer = complex_normal(rng, (length, int(n_interferers)))
    return PilotSet(in_cell=in_cell, interferer=interferer)


def synthesize_received_signal(
    network: NetworkRealization,
    pilots: PilotSet,
    config: ScenarioConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Superimpose in-cell signals, interference, and noise; shape (L, M)."""
    n_ant = config.n_antennas
    amplitudes = network.activity * np.sqrt(network.pathloss)
    channels = complex_normal(rng, (network.n_devices, n_ant))
    received = (pilots.in_cell * amplitudes) @ channels
    if network.n_interferers:
        interferer_amp = np.sqrt(network.interferer_pathloss)
        interferer_channels = complex_normal(rng, (network.n_interferers, n_ant))
        received += (pilots.interferer * interferer_amp) @ interferer_channels
    received += complex_normal(rng, (config.pilot_length, n_ant), var=config.noise_var)
    return received


def sample_covariance(received: np.ndarray) -> np.ndarray:
    """``Y Y^H / M`` over the antenna dimension, symmetrized."""
    received = as_complex_matrix(received, "received signal")
    n_ant = received.shape[1]
    return hermitize(received @ received.conj().T / n_ant)


@dataclass
class Realization:
    """One complete draw: network, pilots, received signal, sample covariance."""

    network: NetworkRealization
    pilots: PilotSet
    received: np.ndarray
    sample_cov: np.ndarray


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-realization stream; shared across estimators and sweeps."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(index),)))


def draw_realization(config: ScenarioConfig, rng: np.random.Generator) -> Realization:
    """Network, then pilots, then signal, from one stream."""
    network = sample_network(config, rng)
    pilots = sample_pilots(config, network.n_interferers, rng)
    received = synthesize_received_signal(network, pilots, config, rng)
    return Realization(network, pilots, received, sample_covariance(received))


def save_realization(path, realization: Realization) -> None:
    """Dump a realization to ``.npz`` (keys documented in the README)."""
    np.savez(
        path,
        pathloss=realization.network.pathloss,
        activity=realization.network.activity,
        interferer_distances=realization.network.interferer_distances,
        interferer_pathloss=realization.network.interferer_pathloss,
        pilots_in_cell=realization.pilots.in_cell,
        pilots_interferer=realization.pilots.interferer,
        received=realization.received,
        sample_cov=realization.sample_cov,
    )
