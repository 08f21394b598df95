"""Binary FSK / ASK modulation, coherent demodulation and bit framing."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, FramingError


class Scheme(str, enum.Enum):
    FSK2 = "FSK2"
    ASK2 = "ASK2"


@dataclass(frozen=True)
class ModemConfig:
    sample_rate: float = 150e3
    symbol_rate: float = 5e3
    f1: float = 10e3  # carrier for bit 0 (and the ASK "on" carrier)
    f2: float = 20e3  # carrier for bit 1
    amplitude: float = 1.0
    scheme: Scheme = Scheme.FSK2

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        self.validate()

    def validate(self) -> None:
        if self.sample_rate <= 0 or self.symbol_rate <= 0:
            raise ConfigurationError("sample_rate and symbol_rate must be positive")
        n = self.sample_rate / self.symbol_rate
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ConfigurationError(
                f"sample_rate/symbol_rate must be a positive integer, got {n:g}"
            )
        for name in ("f1", "f2"):
            f = getattr(self, name)
            cycles = f / self.symbol_rate
            if f <= 0 or abs(cycles - round(cycles)) > 1e-9:
                raise ConfigurationError(f"{name}={f:g} Hz is not a multiple of symbol_rate")
            if f >= self.sample_rate / 2:
                raise ConfigurationError(f"{name}={f:g} Hz is not below Nyquist")
        if self.f1 == self.f2:
            raise ConfigurationError("f1 and f2 must differ")
        if not self.amplitude > 0:
            raise ConfigurationError("amplitude must be positive")

    @property
    def samples_per_symbol(self) -> int:
        return int(round(self.sample_rate / self.symbol_rate))

    def carrier(self, frequency: float) -> np.ndarray:
        """One symbol of unit-amplitude sine at ``frequency``, phase zero at n=0."""
        n = np.arange(self.samples_per_symbol)
        return np.sin(2 * np.pi * frequency * n / self.sample_rate)


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.sample_rate > 0:
            raise DomainError("sample_rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    def scaled(self, gain: float) -> "Waveform":
        return Waveform(self.samples * gain, self.sample_rate, dict(self.metadata))


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int64).reshape(-1)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise DomainError("bits must be 0 or 1")
    return arr.astype(np.uint8)


def _require(cfg: ModemConfig, scheme: Scheme) -> None:
    if cfg.scheme is not scheme:
        raise ConfigurationError(f"expected a {scheme.value} config, got {cfg.scheme.value}")


def fsk_modulate(bits, cfg: ModemConfig) -> Waveform:
    """Phase-reset 2FSK: bit 0 -> f1, bit 1 -> f2, frequency switches at symbol edges."""
    _require(cfg, Scheme.FSK2)
    b = _as_bits(bits)
    table = cfg.amplitude * np.stack([cfg.carrier(cfg.f1), cfg.carrier(cfg.f2)])
    return Waveform(table[b].reshape(-1), cfg.sample_rate)


def ask_modulate(bits, cfg: ModemConfig) -> Waveform:
    """On-off keying on f1: bit 1 -> carrier, bit 0 -> silence."""
    _require(cfg, Scheme.ASK2)
    b = _as_bits(bits)
    on = cfg.amplitude * cfg.carrier(cfg.f1)
    table = np.stack([np.zeros_like(on), on])
    return Waveform(table[b].reshape(-1), cfg.sample_rate)


def modulate(bits, cfg: ModemConfig) -> Waveform:
    if cfg.scheme is Scheme.FSK2:
        return fsk_modulate(bits, cfg)
    return ask_modulate(bits, cfg)


def symbol_windows(wave: Waveform, cfg: ModemConfig) -> np.ndarray:
    """Reshape a symbol-aligned waveform to (n_symbols, samples_per_symbol)."""
    n = cfg.samples_per_symbol
    if len(wave) % n:
        raise FramingError(f"waveform length {len(wave)} is not a multiple of {n}")
    return wave.samples.reshape(-1, n)


def coherent_demod(wave: Waveform, cfg: ModemConfig) -> np.ndarray:
    """In-phase correlator receiver with known symbol timing and zero carrier phase.

    FSK2 decides 1 iff the f2 correlation strictly exceeds the f1 one.  ASK2
    decides 1 iff the f1 correlation exceeds N*A/4, half the noiseless "on"
    correlation.
    """
    windows = symbol_windows(wave, cfg)
    s1 = windows @ cfg.carrier(cfg.f1)
    if cfg.scheme is Scheme.FSK2:
        s2 = windows @ cfg.carrier(cfg.f2)
        decided = s2 > s1
    else:
        decided = s1 > cfg.samples_per_symbol * cfg.amplitude / 4
    return decided.astype(np.uint8)


def count_bit_errors(tx, rx) -> int:
    tx, rx = _as_bits(tx), _as_bits(rx)
    if tx.size != rx.size or tx.size == 0:
        raise DomainError(f"bit streams must be non-empty and equal length ({tx.size} vs {rx.size})")
    return int(np.count_nonzero(tx != rx))


def bit_error_rate(tx, rx) -> float:
    """Fraction of transmitted bits received in error."""
    errors = count_bit_errors(tx, rx)
    return errors / len(tx)


# Frame: 16-bit preamble, 16-bit big-endian payload length, payload MSB-first.
PREAMBLE = 0xAA55
HEADER_BITS = 32


def _int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def _bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def frame_bits(payload: bytes) -> np.ndarray:
    payload = bytes(payload)
    if len(payload) > 0xFFFF:
        raise DomainError("payload longer than 65535 bytes")
    header = _int_to_bits(PREAMBLE, 16) + _int_to_bits(len(payload), 16)
    body = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    return np.concatenate([np.array(header, dtype=np.uint8), body])


def deframe_bits(bits) -> bytes:
    b = _as_bits(bits)
    if b.size < HEADER_BITS:
        raise FramingError("stream shorter than frame header")
    if _bits_to_int(b[:16]) != PREAMBLE:
        raise FramingError("preamble not found")
    length = _bits_to_int(b[16:32])
    end = HEADER_BITS + 8 * length
    if end > b.size:
        raise FramingError(f"frame declares {length} bytes but only {(b.size - HEADER_BITS) // 8} present")
    return np.packbits(b[HEADER_BITS:end]).tobytes()


def write_waveform_csv(wave: Waveform, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "sample"])
        for i, x in enumerate(wave.samples):
            w.writerow([i, repr(float(x))])


def read_waveform_csv(path, sample_rate: float) -> Waveform:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "sample"]:
            raise FramingError(f"{Path(path).name}: expected header 'index,sample'")
        samples = [float(row[1]) for row in reader]
    return Waveform(np.array(samples), sample_rate)


def energy_per_symbol(wave: Waveform, cfg: ModemConfig) -> np.ndarray:
    return np.sum(symbol_windows(wave, cfg) ** 2, axis=1)

