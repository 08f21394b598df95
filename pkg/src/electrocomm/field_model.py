"""Dipole electric-field channel between two electrode pairs in conductive water.

The transmitter electrode pair is treated as a dipole driven at a single
carrier frequency. The received voltage across a second electrode pair at
distance ``r`` follows

    U2 = I0 * d1 * d2 / (4 pi sigma r^3) * sqrt(1 + 2t + 2t^2 + 4t^3 + 4t^4) * exp(-t)

with ``t = r * sqrt(omega mu sigma / 2)``.  With a voltage-driven transmitter
``I0`` is replaced by ``U1 / Rw``.

The complex wavenumber is taken as ``k = kappa * (1 - 1j)`` so that the
``exp(-1j k r)`` propagation term decays as ``exp(-t)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, NearFieldWarning

MU_0 = 4e-7 * math.pi
EPSILON_WATER = 7.08e-10  # F/m at 20 C, roughly 80 * eps0
SIGMA_FRESHWATER = 0.01
SIGMA_SEAWATER = 4.0

QUASI_STATIC_LIMIT = 0.1
NEAR_FIELD_FRACTION = 0.1  # "r << lambda/2pi" read as r < 0.1 * lambda/2pi
GEOMETRIC_NEAR_FIELD_MULTIPLE = 10.0
CLOSED_FORM_MIN_MULTIPLE = 4.0


def _positive_finite(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class WaterMedium:
    conductivity: float  # S/m
    permittivity: float = EPSILON_WATER  # F/m
    permeability: float = MU_0  # H/m

    def __post_init__(self):
        _positive_finite("conductivity", self.conductivity)
        _positive_finite("permittivity", self.permittivity)
        _positive_finite("permeability", self.permeability)


FRESHWATER = WaterMedium(SIGMA_FRESHWATER)
SEAWATER = WaterMedium(SIGMA_SEAWATER)
MEDIUM_PRESETS = {"fresh": FRESHWATER, "sea": SEAWATER}


@dataclass(frozen=True)
class LinkGeometry:
    """Electrode separations and transmitter drive.

    Give either ``drive_current`` (A) or both ``drive_voltage`` (V) and
    ``water_resistance`` (ohm), not both forms.
    """

    d1: float  # transmit electrode separation, m
    d2: float  # receive electrode separation, m
    drive_current: Optional[float] = None
    drive_voltage: Optional[float] = None
    water_resistance: Optional[float] = None

    def __post_init__(self):
        _positive_finite("d1", self.d1)
        _positive_finite("d2", self.d2)
        if self.water_resistance is not None:
            _positive_finite("water_resistance", self.water_resistance)

    @property
    def uses_voltage_drive(self) -> bool:
        return self.drive_voltage is not None

    def source_current(self) -> float:
        """Effective dipole current I0, or U1/Rw for a voltage-driven link."""
        if self.drive_current is not None and self.drive_voltage is not None:
            raise ConfigurationError("specify drive_current or drive_voltage, not both")
        if self.drive_current is not None:
            return float(self.drive_current)
        if self.drive_voltage is not None:
            if self.water_resistance is None:
                raise ConfigurationError("voltage drive requires water_resistance")
            return self.drive_voltage / self.water_resistance
        raise ConfigurationError("link has no drive specification")

    @property
    def span(self) -> float:
        return max(self.d1, self.d2)


# Parameter set used for the voltage-vs-distance surfaces.
REFERENCE_GEOMETRY = LinkGeometry(d1=0.25, d2=0.25, drive_current=0.5)


@dataclass(frozen=True)
class ComplexWavenumber:
    real_part: float
    imag_part: float

    @property
    def value(self) -> complex:
        return complex(self.real_part, self.imag_part)


@dataclass(frozen=True)
class FieldSample:
    e_r: complex
    e_theta: complex
    r: float
    theta: float


def quasi_static_ratio(medium: WaterMedium, frequency: float) -> float:
    """|J_d / J_c| = eps * omega / sigma."""
    if not math.isfinite(frequency) or frequency < 0:
        raise DomainError(f"frequency must be finite and >= 0, got {frequency!r}")
    return medium.permittivity * 2 * math.pi * frequency / medium.conductivity


def quasi_static_ok(medium: WaterMedium, frequency: float) -> bool:
    return quasi_static_ratio(medium, frequency) < QUASI_STATIC_LIMIT


def _kappa(medium: WaterMedium, frequency: float) -> float:
    omega = 2 * math.pi * frequency
    return math.sqrt(omega * medium.permeability * medium.conductivity / 2)


def wavenumber(medium: WaterMedium, frequency: float) -> ComplexWavenumber:
    if not (math.isfinite(frequency) and frequency > 0):
        raise DomainError(f"frequency must be positive, got {frequency!r}")
    kappa = _kappa(medium, frequency)
    return ComplexWavenumber(kappa, -kappa)


def dipole_field(
    r: float,
    theta: float,
    medium: WaterMedium,
    geometry: LinkGeometry,
    frequency: float,
) -> FieldSample:
    """Radial and polar field components of the transmitting dipole at (r, theta)."""
    if not (math.isfinite(r) and r > 0):
        raise DomainError(f"r must be positive, got {r!r}")
    k = wavenumber(medium, frequency).value
    moment = geometry.source_current() * geometry.d1 / medium.conductivity
    prop = np.exp(-1j * k * r)
    e_r = moment * math.cos(theta) / (2 * math.pi) * (1 / r**3 + 1j * k / r**2) * prop
    e_theta = (
        moment * math.sin(theta) / (4 * math.pi)
        * (1 / r**3 + 1j * k / r**2 - k**2 / r) * prop
    )
    return FieldSample(complex(e_r), complex(e_theta), r, theta)


def attenuation_factor(t):
    """sqrt(1 + 2t + 2t^2 + 4t^3 + 4t^4) * exp(-t); accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise DomainError("t must be finite and non-negative")
    poly = 1 + t * (2 + t * (2 + t * (4 + 4 * t)))
    out = np.sqrt(poly) * np.exp(-t)
    return float(out) if out.ndim == 0 else out


def skin_parameter(r: float, frequency: float, medium: WaterMedium) -> float:
    """Dimensionless t = r * sqrt(omega mu sigma / 2)."""
    return r * _kappa(medium, frequency)


def received_voltage(
    r: float,
    frequency: float,
    medium: WaterMedium,
    geometry: LinkGeometry,
) -> float:
    """Voltage across the receive electrodes at distance ``r`` (closed form).

    Emits :class:`NearFieldWarning` when ``r < 4 * max(d1, d2)``, where the
    receive electrodes no longer see an approximately uniform field.
    """
    if not (math.isfinite(r) and r > 0):
        raise DomainError(f"r must be positive, got {r!r}")
    if not math.isfinite(frequency) or frequency < 0:
        raise DomainError(f"frequency must be finite and >= 0, got {frequency!r}")
    current = geometry.source_current()
    if r < CLOSED_FORM_MIN_MULTIPLE * geometry.span:
        warnings.warn(
            f"r={r} m is below {CLOSED_FORM_MIN_MULTIPLE:g}*max(d1, d2); "
            "closed-form receive voltage is unreliable",
            NearFieldWarning,
            stacklevel=2,
        )
    t = skin_parameter(r, frequency, medium)
    static = current * geometry.d1 * geometry.d2 / (4 * math.pi * medium.conductivity * r**3)
    return static * attenuation_factor(t)


def near_field_radius(medium: WaterMedium, frequency: float) -> float:
    """lambda / (2 pi) = sqrt(2 / (omega mu sigma))."""
    if not (math.isfinite(frequency) and frequency > 0):
        raise DomainError(f"frequency must be positive, got {frequency!r}")
    return 1.0 / _kappa(medium, frequency)


def in_near_field(r: float, medium: WaterMedium, frequency: float) -> bool:
    return r < NEAR_FIELD_FRACTION * near_field_radius(medium, frequency)


def outside_geometric_near_field(r: float, geometry: LinkGeometry) -> bool:
    """Rule of thumb: beyond ten electrode spans the link is outside the near field."""
    return r > GEOMETRIC_NEAR_FIELD_MULTIPLE * geometry.span
