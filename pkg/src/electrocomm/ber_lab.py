"""Monte-Carlo BER experiments, voltage tables and the transmit power budget.

Every grid point draws its bits and noise from seeds derived as
``seed + point_index``, so a result is a pure function of its inputs and
points can be recomputed independently.
"""
from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel_sim import (
    LinkSpec,
    apply_link,
    derive_seed,
    gaussian_noise,
    link_gain,
    noise_std_for_snr,
    signal_power,
)
from .errors import ConfigurationError, DomainError
from .field_model import FRESHWATER, LinkGeometry, WaterMedium, received_voltage
from .modem import ModemConfig, Scheme, Waveform, ask_modulate, coherent_demod, count_bit_errors, fsk_modulate
from .neural_demod import MlpModel, nn_demodulate

METHODS = ("coherent_fsk", "nn_fsk", "coherent_ask")
DEFAULT_SNR_GRID = tuple(range(-20, 11, 2))
DEFAULT_DISTANCES = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
POWER_BUDGET_W = 0.1
KNEE_SNR_DB = 2.0
KNEE_DISTANCE_M = 10.0

SNR_HEADER = ("snr_db", "method", "bits", "errors", "ber")
DISTANCE_HEADER = ("distance_m", "method", "bits", "errors", "ber")
VOLTAGE_HEADER = ("r_m", "f_hz", "u2_volts")
POWER_HEADER = ("vpp_v", "rw_ohm", "power_w", "under_budget")


@dataclass(frozen=True)
class SweepRow:
    x_value: float
    method: str
    bits_total: int
    bit_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


@dataclass
class SweepResult:
    x_name: str  # "snr_db" or "distance_m"
    rows: list
    metadata: dict = field(default_factory=dict)

    def ber(self, method: str) -> dict:
        """{x_value: ber} for one method."""
        return {r.x_value: r.ber for r in self.rows if r.method == method}

    def write_csv(self, path) -> None:
        header = SNR_HEADER if self.x_name == "snr_db" else DISTANCE_HEADER
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in self.rows:
                w.writerow([_fmt(r.x_value), r.method, r.bits_total, r.bit_errors, repr(r.ber)])

    def table(self) -> str:
        lines = [f"{self.x_name:>10}  {'method':<13} {'bits':>8} {'errors':>8}  ber"]
        for r in self.rows:
            lines.append(f"{_fmt(r.x_value):>10}  {r.method:<13} {r.bits_total:>8} {r.bit_errors:>8}  {r.ber:.3e}")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return f"{x:g}"


def _sorted_rows(rows: Iterable[SweepRow]) -> list:
    return sorted(rows, key=lambda r: (r.x_value, r.method))


def _random_bits(n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64([seed, 1]))
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def _check_methods(methods: Sequence[str], model: Optional[MlpModel]) -> tuple:
    methods = tuple(dict.fromkeys(methods))
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise ConfigurationError(f"unknown methods {unknown}; choose from {METHODS}")
    if "nn_fsk" in methods and model is None:
        raise ConfigurationError("nn_fsk requested but no trained model supplied")
    return methods


def _demodulate(method: str, received: Waveform, fsk_cfg: ModemConfig, ask_cfg: ModemConfig, model) -> np.ndarray:
    if method == "coherent_fsk":
        return coherent_demod(received, fsk_cfg)
    if method == "nn_fsk":
        return nn_demodulate(model, received, fsk_cfg)
    return coherent_demod(received, ask_cfg)


def snr_sweep(
    methods: Sequence[str],
    snr_grid: Sequence[float],
    bits: int,
    seed: int,
    modem_cfg: ModemConfig = ModemConfig(),
    model: Optional[MlpModel] = None,
) -> SweepResult:
    """BER against SNR with paired trials across methods.

    At each SNR one bit stream and one noise realization are drawn.  The
    noise level is set from the 2FSK waveform power; the 2ASK waveform
    (same peak amplitude) receives the very same noise samples, so the
    comparison is at matched peak amplitude and matched absolute noise.
    """
    methods = _check_methods(methods, model)
    if not len(snr_grid):
        raise DomainError("empty SNR grid")
    if bits <= 0:
        raise DomainError("bits must be positive")
    fsk_cfg = replace(modem_cfg, scheme=Scheme.FSK2)
    ask_cfg = replace(modem_cfg, scheme=Scheme.ASK2)
    rows = []
    for i, snr in enumerate(snr_grid):
        point_seed = derive_seed(seed, i)
        tx = _random_bits(bits, point_seed)
        fsk = fsk_modulate(tx, fsk_cfg)
        std = noise_std_for_snr(signal_power(fsk.samples), snr)
        noise = gaussian_noise(len(fsk), std, point_seed)
        waves = {"fsk": Waveform(fsk.samples + noise, fsk.sample_rate)}
        if "coherent_ask" in methods:
            ask = ask_modulate(tx, ask_cfg)
            waves["ask"] = Waveform(ask.samples + noise, ask.sample_rate)
        for m in methods:
            rx = _demodulate(m, waves["ask" if m == "coherent_ask" else "fsk"], fsk_cfg, ask_cfg, model)
            rows.append(SweepRow(float(snr), m, bits, count_bit_errors(tx, rx)))
    meta = {
        "seed": seed,
        "bits_per_point": bits,
        "modem": fsk_cfg,
        "noise_reference": "2FSK waveform power; shared noise across methods",
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    return SweepResult("snr_db", _sorted_rows(rows), meta)


def default_link_geometry(modem_cfg: ModemConfig = ModemConfig(), water_resistance: float = 200.0) -> LinkGeometry:
    """Reference electrode spacing, driven by the modem output voltage."""
    return LinkGeometry(d1=0.25, d2=0.25, drive_voltage=modem_cfg.amplitude, water_resistance=water_resistance)


def link_template(
    modem_cfg: ModemConfig = ModemConfig(),
    medium: WaterMedium = FRESHWATER,
    geometry: Optional[LinkGeometry] = None,
) -> LinkSpec:
    """LinkSpec at the knee distance with the gain evaluated at (f1 + f2) / 2."""
    return LinkSpec(
        medium=medium,
        geometry=geometry or default_link_geometry(modem_cfg),
        distance=KNEE_DISTANCE_M,
        carrier_ref_hz=(modem_cfg.f1 + modem_cfg.f2) / 2,
    )


def calibrated_noise_floor(
    link: LinkSpec,
    modem_cfg: ModemConfig = ModemConfig(),
    distance: float = KNEE_DISTANCE_M,
    snr_db: float = KNEE_SNR_DB,
) -> float:
    """Noise RMS giving ``snr_db`` realized waveform SNR at ``distance``.

    A 2FSK waveform of peak A has RMS A/sqrt(2); after the link it is
    g*A/sqrt(2), and the floor is that divided by 10**(snr_db/20).
    """
    g = link_gain(replace(link, distance=distance))
    received_rms = g * modem_cfg.amplitude / math.sqrt(2)
    return received_rms / 10 ** (snr_db / 20)


def distance_sweep(
    link: LinkSpec,
    distances: Sequence[float],
    noise_floor: float,
    bits: int,
    seed: int,
    modem_cfg: ModemConfig = ModemConfig(),
    model: Optional[MlpModel] = None,
    methods: Sequence[str] = ("nn_fsk",),
) -> SweepResult:
    """BER against transmitter-receiver distance at a fixed absolute noise floor."""
    methods = _check_methods(methods, model)
    d = [float(x) for x in distances]
    if not d or any(x <= 0 for x in d) or any(b <= a for a, b in zip(d, d[1:])):
        raise DomainError("distances must be positive and strictly ascending")
    if noise_floor < 0 or not math.isfinite(noise_floor):
        raise DomainError("noise_floor must be finite and >= 0")
    fsk_cfg = replace(modem_cfg, scheme=Scheme.FSK2)
    ask_cfg = replace(modem_cfg, scheme=Scheme.ASK2)
    rows, gains = [], {}
    for i, r in enumerate(d):
        point_seed = derive_seed(seed, i)
        tx = _random_bits(bits, point_seed)
        hop = replace(link, distance=r)
        noise = gaussian_noise(bits * fsk_cfg.samples_per_symbol, noise_floor, point_seed)
        fsk = apply_link(fsk_modulate(tx, fsk_cfg), hop)
        gains[r] = fsk.metadata["link_gain"]
        waves = {"fsk": Waveform(fsk.samples + noise, fsk.sample_rate)}
        if "coherent_ask" in methods:
            ask = apply_link(ask_modulate(tx, ask_cfg), hop)
            waves["ask"] = Waveform(ask.samples + noise, ask.sample_rate)
        for m in methods:
            rx = _demodulate(m, waves["ask" if m == "coherent_ask" else "fsk"], fsk_cfg, ask_cfg, model)
            rows.append(SweepRow(r, m, bits, count_bit_errors(tx, rx)))
    meta = {
        "seed": seed,
        "bits_per_point": bits,
        "noise_floor_v": noise_floor,
        "link_gain": gains,
        "carrier_ref_hz": link.carrier_ref_hz,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    return SweepResult("distance_m", _sorted_rows(rows), meta)


def distance_grid(r_min: float, r_max: float, step: float) -> list:
    """Inclusive arithmetic grid, rounded to suppress float drift."""
    if step <= 0:
        raise DomainError("step must be positive")
    if r_min <= 0 or r_max < r_min:
        raise DomainError("need 0 < r_min <= r_max")
    n = int(math.floor((r_max - r_min) / step + 1e-9)) + 1
    return [round(r_min + k * step, 12) for k in range(n)]


def voltage_curve(
    r_grid: Sequence[float],
    f_grid: Sequence[float],
    medium: WaterMedium,
    geometry: LinkGeometry,
) -> list:
    """Rows of (r_m, f_hz, u2_volts), grouped by frequency then ascending r."""
    if any(r <= 0 for r in r_grid) or any(f <= 0 for f in f_grid):
        raise DomainError("distance and frequency grids must be positive")
    return [
        (float(r), float(f), received_voltage(r, f, medium, geometry))
        for f in f_grid
        for r in r_grid
    ]


def write_voltage_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VOLTAGE_HEADER)
        for r, f, u in rows:
            w.writerow([_fmt(r), _fmt(f), repr(u)])


@dataclass(frozen=True)
class PowerBudget:
    vpp: float
    r_w: float
    power: float

    @property
    def under_budget(self) -> bool:
        return self.power < POWER_BUDGET_W

    def csv_row(self) -> list:
        return [_fmt(self.vpp), _fmt(self.r_w), repr(self.power), str(self.under_budget).lower()]


def transmit_power(vpp: float, r_w: float) -> PowerBudget:
    """Mean power of a sine of peak-to-peak ``vpp`` into ``r_w``: vpp**2 / (8 r_w)."""
    if not (r_w > 0 and math.isfinite(r_w)):
        raise DomainError(f"water resistance must be positive, got {r_w!r}")
    if vpp < 0:
        raise DomainError("vpp must be non-negative")
    return PowerBudget(vpp, r_w, vpp**2 / (8 * r_w))


def write_power_csv(budget: PowerBudget, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POWER_HEADER)
        w.writerow(budget.csv_row())
