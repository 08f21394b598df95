"""Link attenuation and additive white Gaussian noise.

Randomness comes from numpy's PCG64 bit generator seeded with the 64-bit
``NoiseSpec.seed``; Gaussian variates are numpy's ziggurat
``Generator.standard_normal`` in float64.  Both algorithms are part of
numpy's stream-compatibility policy, so a seed pins the output across
platforms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .field_model import LinkGeometry, WaterMedium, received_voltage
from .modem import Waveform

SEED_MASK = (1 << 64) - 1


class NoiseMode(str, enum.Enum):
    SNR_DB = "SNR_DB"
    FLOOR_VOLTS = "FLOOR_VOLTS"


@dataclass(frozen=True)
class NoiseSpec:
    mode: NoiseMode = NoiseMode.SNR_DB
    snr_db: float = 0.0
    noise_rms: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", NoiseMode(self.mode))
        if not 0 <= self.seed <= SEED_MASK:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if self.noise_rms < 0 or not math.isfinite(self.noise_rms):
            raise ConfigurationError("noise_rms must be finite and >= 0")

    @classmethod
    def snr(cls, snr_db: float, seed: int = 0) -> "NoiseSpec":
        return cls(NoiseMode.SNR_DB, snr_db=snr_db, seed=seed)

    @classmethod
    def floor(cls, noise_rms: float, seed: int = 0) -> "NoiseSpec":
        return cls(NoiseMode.FLOOR_VOLTS, noise_rms=noise_rms, seed=seed)


@dataclass(frozen=True)
class LinkSpec:
    medium: WaterMedium
    geometry: LinkGeometry
    distance: float
    carrier_ref_hz: float

    def __post_init__(self):
        if not (math.isfinite(self.distance) and self.distance > 0):
            raise DomainError(f"distance must be positive, got {self.distance!r}")


def derive_seed(seed: int, index: int) -> int:
    """Per-trial seed: seed + index, wrapped to 64 bits."""
    return (seed + index) & SEED_MASK


def gaussian_noise(size: int, std: float, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return std * rng.standard_normal(size)


def signal_power(samples: np.ndarray) -> float:
    return float(np.mean(np.square(samples)))


def noise_std_for_snr(power: float, snr_db: float) -> float:
    return math.sqrt(power / 10 ** (snr_db / 10))


def add_awgn(wave: Waveform, noise: NoiseSpec) -> Waveform:
    """Add i.i.d. Gaussian noise.

    In SNR mode the noise variance is mean(x**2) / 10**(snr_db/10), measured
    over the whole waveform; in floor mode the standard deviation is
    ``noise_rms``.
    """
    if len(wave) == 0:
        raise DomainError("cannot add noise to an empty waveform")
    if noise.mode is NoiseMode.SNR_DB:
        std = noise_std_for_snr(signal_power(wave.samples), noise.snr_db)
    else:
        std = noise.noise_rms
    out = wave.samples + gaussian_noise(len(wave), std, noise.seed)
    meta = dict(wave.metadata, noise_std=std)
    return Waveform(out, wave.sample_rate, meta)


def link_gain(link: LinkSpec) -> float:
    """U2/U1 at ``carrier_ref_hz`` for a voltage-driven transmitter."""
    geom = link.geometry
    if geom.drive_voltage is None or geom.water_resistance is None:
        raise ConfigurationError("apply_link needs a voltage-driven geometry (drive_voltage, water_resistance)")
    u2 = received_voltage(link.distance, link.carrier_ref_hz, link.medium, geom)
    return u2 / geom.drive_voltage


def apply_link(wave: Waveform, link: LinkSpec) -> Waveform:
    g = link_gain(link)
    out = wave.scaled(g)
    out.metadata["link_gain"] = g
    return out


def measure_snr(clean: Waveform, noisy: Waveform) -> float:
    """Realized SNR in dB; ``math.inf`` when the two waveforms are identical."""
    if len(clean) != len(noisy):
        raise DomainError("waveforms differ in length")
    noise_power = signal_power(noisy.samples - clean.samples)
    if noise_power == 0:
        return math.inf
    return 10 * math.log10(signal_power(clean.samples) / noise_power)
