"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .ber_lab import (
    calibrated_noise_floor,
    distance_grid,
    distance_sweep,
    link_template,
    snr_sweep,
    transmit_power,
    voltage_curve,
    write_power_csv,
    write_voltage_csv,
)
from .config import RunConfig, dump_config, load_config, parse_floor
from .errors import ConfigurationError, DomainError, ModelFileError, NearFieldWarning, TrainingDivergedError
from .field_model import near_field_radius, quasi_static_ok, quasi_static_ratio
from .neural_demod import generate_dataset, init_model, load_model, save_model, train

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
MODEL_FILE = "model.ecmlp"


class UsageError(Exception):
    pass


def _grid(text: str, flag: str) -> list:
    """'a,b,c' or inclusive range 'start:stop:step'."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise UsageError(f"{flag}: range step must be positive")
            n = int((stop - start) / step + 1e-9) + 1
            return [round(start + k * step, 12) for k in range(max(n, 0))]
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"{flag}: cannot parse {text!r}") from None


def _out_path(cfg: RunConfig, given, default_name: str) -> Path:
    path = Path(given) if given else cfg.output_dir / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _model(cfg: RunConfig, given):
    path = Path(given) if given else cfg.output_dir / MODEL_FILE
    if not path.exists():
        raise UsageError(f"model file {path} not found (run 'electrocomm train' or pass --model)")
    try:
        return load_model(path)
    except ModelFileError as exc:
        raise UsageError(str(exc)) from exc


def cmd_channel_curve(args, cfg: RunConfig) -> int:
    for flag in ("r_min", "r_max", "r_step"):
        if getattr(args, flag) <= 0:
            raise UsageError(f"--{flag.replace('_', '-')} must be positive")
    if args.r_max < args.r_min:
        raise UsageError("--r-max must not be below --r-min")
    freqs = _grid(args.freqs, "--freqs")
    if not freqs or any(f <= 0 for f in freqs):
        raise UsageError("--freqs must be positive")
    r_grid = distance_grid(args.r_min, args.r_max, args.r_step)
    geometry = cfg.geometry
    if geometry.drive_current is None and geometry.drive_voltage is None:
        raise ConfigurationError("geometry needs drive_current or drive_voltage")
    for f in freqs:
        ratio = quasi_static_ratio(cfg.medium, f)
        radius = near_field_radius(cfg.medium, f)
        note = "" if quasi_static_ok(cfg.medium, f) else "  WARNING: displacement current not negligible"
        print(f"f={f:g} Hz  near-field radius={radius:.4g} m  |Jd/Jc|={ratio:.4g}{note}")
        if r_grid[-1] >= 0.1 * radius:
            print(f"  note: r up to {r_grid[-1]:g} m reaches beyond 0.1 x near-field radius")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NearFieldWarning)
        rows = voltage_curve(r_grid, freqs, cfg.medium, geometry)
    if caught:
        print(f"warning: {len({str(w.message) for w in caught})} distance(s) closer than 4 x electrode span")
    out = _out_path(cfg, args.out, "voltage_curve.csv")
    write_voltage_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    tc = cfg.training
    dataset = generate_dataset(cfg.modem, tc.snr_grid_db, tc.symbols_per_snr, tc.seed, tc.augment_rates)
    print(f"training on {len(dataset)} windows, SNR grid {list(tc.snr_grid_db)} dB, {tc.epochs} epochs")
    try:
        model, history = train(init_model(tc.seed), dataset, tc)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    model_path = _out_path(cfg, args.model_out, MODEL_FILE)
    save_model(model, model_path)
    loss_path = model_path.parent / "loss.csv"
    with open(loss_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "mean_bce"])
        for epoch, loss in enumerate(history):
            w.writerow([epoch, repr(loss)])
    print(f"initial loss {history[0]:.4f}, final loss {history[-1]:.4f}")
    print(f"wrote {model_path} and {loss_path}")
    return EXIT_OK


def cmd_ber_sweep(args, cfg: RunConfig) -> int:
    methods = tuple(args.methods.split(",")) if args.methods else cfg.sweep.methods
    grid = _grid(args.snr, "--snr") if args.snr else list(cfg.sweep.snr_grid_db)
    bits = args.bits or cfg.sweep.bits
    if not grid:
        raise UsageError("--snr: empty grid")
    model = _model(cfg, args.model) if "nn_fsk" in methods else None
    result = snr_sweep(methods, grid, bits, cfg.noise.seed, cfg.modem, model)
    out = _out_path(cfg, args.out, "ber_snr.csv")
    result.write_csv(out)
    print(result.table())
    print(f"wrote {out}")
    return EXIT_OK


def cmd_ber_distance(args, cfg: RunConfig) -> int:
    methods = tuple(args.methods.split(",")) if args.methods else ("nn_fsk",)
    distances = _grid(args.distances, "--distances") if args.distances else list(cfg.sweep.distances)
    bits = args.bits or cfg.sweep.bits
    model = _model(cfg, args.model) if "nn_fsk" in methods else None
    geometry = cfg.geometry
    if geometry.drive_voltage is None:
        geometry = replace(geometry, drive_current=None, drive_voltage=cfg.modem.amplitude)
    link = link_template(cfg.modem, cfg.medium, geometry)
    floor = parse_floor(args.floor or cfg.sweep.floor)
    if floor is None:
        floor = calibrated_noise_floor(link, cfg.modem)
        print(f"noise floor (auto): {floor:.6g} V RMS -> +2 dB waveform SNR at 10 m")
    result = distance_sweep(link, distances, floor, bits, cfg.noise.seed, cfg.modem, model, methods)
    out = _out_path(cfg, args.out, "ber_distance.csv")
    result.write_csv(out)
    print(result.table())
    print(f"wrote {out}")
    return EXIT_OK


def cmd_link_budget(args, cfg: RunConfig) -> int:
    if args.rw <= 0:
        raise UsageError("--rw must be positive")
    if args.vpp < 0:
        raise UsageError("--vpp must be non-negative")
    budget = transmit_power(args.vpp, args.rw)
    print(f"{budget.power:g} W, under_budget={str(budget.under_budget).lower()}")
    if args.out:
        write_power_csv(budget, _out_path(cfg, args.out, "power.csv"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")

    p = argparse.ArgumentParser(prog="electrocomm", description="Underwater electric-field link laboratory")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    channel = sub.add_parser("channel", help="channel model").add_subparsers(dest="action", required=True)
    c = channel.add_parser("curve", parents=[common], help="received voltage over distance and frequency")
    c.add_argument("--r-min", type=float, default=3.0)
    c.add_argument("--r-max", type=float, default=30.0)
    c.add_argument("--r-step", type=float, default=1.0)
    c.add_argument("--freqs", default="1e3,1e4,1e5,1e6", help="comma list or start:stop:step, Hz")
    c.add_argument("--out")
    c.set_defaults(func=cmd_channel_curve)

    t = sub.add_parser("train", parents=[common], help="train the neural demodulator")
    t.add_argument("--model-out")
    t.set_defaults(func=cmd_train)

    ber = sub.add_parser("ber", help="bit-error-rate experiments").add_subparsers(dest="action", required=True)
    s = ber.add_parser("sweep", parents=[common], help="BER against SNR")
    s.add_argument("--model")
    s.add_argument("--methods", help="comma list of coherent_fsk, nn_fsk, coherent_ask")
    s.add_argument("--snr", help="comma list or start:stop:step, dB")
    s.add_argument("--bits", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ber_sweep)

    d = ber.add_parser("distance", parents=[common], help="BER against distance")
    d.add_argument("--model")
    d.add_argument("--methods")
    d.add_argument("--distances", help="comma list or start:stop:step, m")
    d.add_argument("--floor", help="'auto' or noise RMS in volts")
    d.add_argument("--bits", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_ber_distance)

    link = sub.add_parser("link", help="link budget").add_subparsers(dest="action", required=True)
    lb = link.add_parser("budget", parents=[common], help="transmit power for a sine drive")
    lb.add_argument("--vpp", type=float, required=True)
    lb.add_argument("--rw", type=float, required=True)
    lb.add_argument("--out")
    lb.set_defaults(func=cmd_link_budget)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        if getattr(args, "bits", None) is not None and args.bits <= 0:
            raise UsageError("--bits must be positive")
        return args.func(args, cfg)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
