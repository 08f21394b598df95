"""Run configuration: a sectioned ``key = value`` text format.

    # comment
    [modem]
    sample_rate = 150000
    f1 = 10000

Unknown sections or keys are rejected with their line number.  Every
section and key is optional; omitted values take the package defaults.
:func:`dump_config` writes the full effective configuration in the same
format, and loading that text reproduces the configuration exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Optional

from .ber_lab import DEFAULT_DISTANCES, DEFAULT_SNR_GRID, METHODS
from .channel_sim import NoiseMode, NoiseSpec
from .errors import ConfigurationError, DomainError
from .field_model import MEDIUM_PRESETS, LinkGeometry, WaterMedium
from .modem import ModemConfig, Scheme
from .neural_demod import TrainConfig


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _opt_float(text: str) -> Optional[float]:
    return None if text.lower() == "none" else _float(text)


def _int(text: str) -> int:
    return int(text, 0)


def _float_list(text: str) -> tuple:
    return tuple(_float(tok) for tok in text.split(",") if tok.strip())


def _opt_int_list(text: str) -> Optional[tuple]:
    if text.lower() == "none":
        return None
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _word_list(text: str) -> tuple:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, (Scheme, NoiseMode)):
        return value.value
    return str(value)


@dataclass(frozen=True)
class SweepConfig:
    methods: tuple = METHODS
    snr_grid_db: tuple = tuple(float(s) for s in DEFAULT_SNR_GRID)
    bits: int = 10_000
    distances: tuple = DEFAULT_DISTANCES
    floor: str = "auto"  # "auto" or a noise RMS in volts


@dataclass(frozen=True)
class RunConfig:
    medium_preset: str = "fresh"
    medium: WaterMedium = MEDIUM_PRESETS["fresh"]
    geometry: LinkGeometry = LinkGeometry(d1=0.25, d2=0.25, drive_current=0.5, water_resistance=200.0)
    modem: ModemConfig = ModemConfig()
    noise: NoiseSpec = NoiseSpec()
    training: TrainConfig = TrainConfig()
    sweep: SweepConfig = SweepConfig()
    output_dir: Path = Path("runs")


# section -> key -> value parser
_SCHEMA: dict[str, dict[str, Callable]] = {
    "medium": {
        "preset": str,
        "conductivity": _float,
        "permittivity": _float,
        "permeability": _float,
    },
    "geometry": {
        "d1": _float,
        "d2": _float,
        "drive_current": _opt_float,
        "drive_voltage": _opt_float,
        "water_resistance": _opt_float,
    },
    "modem": {
        "sample_rate": _float,
        "symbol_rate": _float,
        "f1": _float,
        "f2": _float,
        "amplitude": _float,
        "scheme": str,
    },
    "noise": {"mode": str, "value": _float, "seed": _int},
    "training": {
        "learning_rate": _float,
        "batch_size": _int,
        "epochs": _int,
        "seed": _int,
        "snr_grid_db": _float_list,
        "symbols_per_snr": _int,
        "augment_rates": _opt_int_list,
    },
    "sweep": {
        "methods": _word_list,
        "snr_grid_db": _float_list,
        "bits": _int,
        "distances": _float_list,
        "floor": str,
    },
    "output": {"directory": str},
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse to {section: {key: value}}, validating names and value syntax."""
    values: dict[str, dict] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigurationError(f"{where}: unknown section [{section}]")
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigurationError(f"{where}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigurationError(f"{where}: key outside of any [section]")
        key, _, val = (part.strip() for part in line.partition("="))
        parser = _SCHEMA[section].get(key)
        if parser is None:
            raise ConfigurationError(f"{where}: unknown key '{key}' in [{section}]")
        if key in values[section]:
            raise ConfigurationError(f"{where}: duplicate key '{key}'")
        try:
            values[section][key] = parser(val)
        except ValueError as exc:
            raise ConfigurationError(f"{where}: bad value for '{key}': {val!r}") from exc
    return values


def build_config(values: dict) -> RunConfig:
    base = RunConfig()
    try:
        med = values.get("medium", {})
        preset = med.get("preset", base.medium_preset)
        if preset not in MEDIUM_PRESETS and preset != "custom":
            raise ConfigurationError(f"unknown medium preset {preset!r}")
        medium = MEDIUM_PRESETS.get(preset, base.medium)
        medium = replace(medium, **{k: v for k, v in med.items() if k != "preset"})

        geometry = replace(base.geometry, **values.get("geometry", {}))
        modem = replace(base.modem, **values.get("modem", {}))

        nz = values.get("noise", {})
        mode = NoiseMode(nz.get("mode", base.noise.mode))
        level = nz.get("value", base.noise.snr_db if mode is NoiseMode.SNR_DB else base.noise.noise_rms)
        noise = NoiseSpec(
            mode,
            snr_db=level if mode is NoiseMode.SNR_DB else 0.0,
            noise_rms=level if mode is NoiseMode.FLOOR_VOLTS else 0.0,
            seed=nz.get("seed", base.noise.seed),
        )

        training = replace(base.training, **values.get("training", {}))
        sweep = replace(base.sweep, **values.get("sweep", {}))
        bad = [m for m in sweep.methods if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown sweep methods {bad}")
        if sweep.floor != "auto":
            parse_floor(sweep.floor)
        out = Path(values.get("output", {}).get("directory", base.output_dir))
    except (ValueError, DomainError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc
    return RunConfig(preset, medium, geometry, modem, noise, training, sweep, out)


def parse_floor(text: str) -> Optional[float]:
    """``auto`` -> None, otherwise a non-negative noise RMS in volts."""
    if text == "auto":
        return None
    try:
        value = _float(text)
    except ValueError as exc:
        raise ConfigurationError(f"floor must be 'auto' or volts, got {text!r}") from exc
    if value < 0:
        raise ConfigurationError("floor must be non-negative")
    return value


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc.strerror}") from exc
    return build_config(parse_config_text(text, str(p)))


def dump_config(cfg: RunConfig) -> str:
    noise_value = cfg.noise.snr_db if cfg.noise.mode is NoiseMode.SNR_DB else cfg.noise.noise_rms
    sections = {
        "medium": {"preset": cfg.medium_preset, **{f.name: getattr(cfg.medium, f.name) for f in fields(cfg.medium)}},
        "geometry": {f.name: getattr(cfg.geometry, f.name) for f in fields(cfg.geometry)},
        "modem": {f.name: getattr(cfg.modem, f.name) for f in fields(cfg.modem)},
        "noise": {"mode": cfg.noise.mode, "value": noise_value, "seed": cfg.noise.seed},
        "training": {f.name: getattr(cfg.training, f.name) for f in fields(cfg.training)},
        "sweep": {f.name: getattr(cfg.sweep, f.name) for f in fields(cfg.sweep)},
        "output": {"directory": cfg.output_dir.as_posix()},
    }
    lines = ["# electrocomm effective configuration"]
    for name, entries in sections.items():
        lines.append(f"\n[{name}]")
        lines.extend(f"{k} = {_fmt(v)}" for k, v in entries.items())
    return "\n".join(lines) + "\n"
