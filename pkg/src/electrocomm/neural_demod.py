"""Multilayer-perceptron symbol classifier for 2FSK.

Each received symbol window (30 samples at the default modem settings) is
scaled to unit RMS and fed through a 30-28-10-1 network with tanh hidden
units and a sigmoid output giving P(bit = 1).  Training is plain mini-batch
gradient descent on binary cross-entropy.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel_sim import NoiseSpec, add_awgn, derive_seed
from .errors import (
    ModelDimensionError,
    ModelFormatError,
    ModelVersionError,
    ShapeError,
    TrainingDivergedError,
)
from .modem import ModemConfig, Waveform, fsk_modulate, symbol_windows

LAYER_SIZES = (30, 28, 10, 1)
MAGIC = "ECMLP v1"
DEFAULT_SNR_GRID = tuple(range(-20, 11, 2))


@dataclass
class MlpModel:
    layer_sizes: tuple
    weights: list  # weights[l] has shape (layer_sizes[l+1], layer_sizes[l])
    biases: list
    hidden_activation: str = "tanh"
    output_activation: str = "sigmoid"

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        if len(self.layer_sizes) < 2 or self.layer_sizes[-1] != 1:
            raise ShapeError(f"layer sizes must end in a single output, got {self.layer_sizes}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("one weight matrix and bias vector required per layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            n_in, n_out = self.layer_sizes[l], self.layer_sizes[l + 1]
            if np.shape(w) != (n_out, n_in) or np.shape(b) != (n_out,):
                raise ShapeError(
                    f"layer {l}: expected W{(n_out, n_in)} b({n_out},), "
                    f"got W{np.shape(w)} b{np.shape(b)}"
                )
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]

    @property
    def input_width(self) -> int:
        return self.layer_sizes[0]

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)

    def parameters(self) -> list:
        return [*self.weights, *self.biases]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 64
    epochs: int = 200
    seed: int = 1
    snr_grid_db: tuple = DEFAULT_SNR_GRID
    symbols_per_snr: int = 2000
    augment_rates: Optional[tuple] = None  # e.g. (24, 30, 36) samples/symbol

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        if self.augment_rates is not None:
            object.__setattr__(self, "augment_rates", tuple(int(n) for n in self.augment_rates))
        if not (self.learning_rate > 0 and self.batch_size > 0 and self.epochs > 0
                and self.symbols_per_snr > 0 and self.seed >= 0):
            raise ValueError("training parameters must be positive")
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db must not be empty")


@dataclass
class Dataset:
    """Labelled symbol windows, one row per symbol."""

    inputs: np.ndarray
    labels: np.ndarray
    snr_db: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.labels)


def init_model(seed: int = 0, layer_sizes: Sequence[int] = LAYER_SIZES) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MlpModel(tuple(layer_sizes), weights, biases)


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_inputs(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.input_width or x.ndim not in (1, 2):
        raise ShapeError(f"expected windows of width {model.input_width}, got shape {x.shape}")
    return x


def _activations(model: MlpModel, x: np.ndarray) -> tuple[list, np.ndarray]:
    """Hidden activations (input first) and output logits for a batch."""
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        if l == last:
            return acts, z[:, 0]
        h = np.tanh(z)
        acts.append(h)
    raise AssertionError("unreachable")


def logits(model: MlpModel, windows) -> np.ndarray:
    x = _check_inputs(model, windows)
    return _activations(model, np.atleast_2d(x))[1]


def forward(model: MlpModel, window):
    """P(bit = 1) for one window (returns float) or a batch (returns array)."""
    x = _check_inputs(model, window)
    p = _sigmoid(_activations(model, np.atleast_2d(x))[1])
    return float(p[0]) if x.ndim == 1 else p


def bce_loss(model: MlpModel, inputs, labels) -> float:
    z = logits(model, inputs)
    y = np.asarray(labels, dtype=float)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def backprop_gradients(model: MlpModel, inputs, labels) -> tuple[list, list, float]:
    """Gradients of mean binary cross-entropy.

    Returns ``(weight_grads, bias_grads, loss)`` with the grads shaped like
    ``model.weights`` / ``model.biases``.
    """
    x = np.atleast_2d(_check_inputs(model, inputs))
    y = np.asarray(labels, dtype=float).reshape(-1)
    n = len(y)
    acts, z = _activations(model, x)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))

    delta = ((_sigmoid(z) - y) / n)[:, None]
    w_grads: list = [None] * len(model.weights)
    b_grads: list = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        w_grads[l] = delta.T @ acts[l]
        b_grads[l] = delta.sum(axis=0)
        if l:
            delta = (delta @ model.weights[l]) * (1.0 - acts[l] ** 2)
    return w_grads, b_grads, loss


def train(model: MlpModel, dataset: Dataset, cfg: TrainConfig) -> tuple[MlpModel, list]:
    """Mini-batch gradient descent on a copy of ``model``.

    Returns ``(trained, history)``.  ``history[0]`` is the loss of the
    untrained model over the whole dataset; ``history[e]`` for e >= 1 is the
    mean per-sample loss seen while running epoch e.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    balance = float(np.mean(dataset.labels))
    if not 0.45 <= balance <= 0.55:
        raise ValueError(f"labels unbalanced: {balance:.3f} ones")
    model = model.copy()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    x_all = _check_inputs(model, dataset.inputs)
    y_all = np.asarray(dataset.labels, dtype=float)
    n = len(y_all)
    history = [bce_loss(model, x_all, y_all)]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            w_grads, b_grads, loss = backprop_gradients(model, x_all[idx], y_all[idx])
            total += loss * len(idx)
            for l in range(len(model.weights)):
                model.weights[l] -= cfg.learning_rate * w_grads[l]
                model.biases[l] -= cfg.learning_rate * b_grads[l]
        mean_loss = total / n
        if not math.isfinite(mean_loss):
            raise TrainingDivergedError(epoch)
        history.append(mean_loss)
    return model, history


def normalize_windows(windows: np.ndarray) -> np.ndarray:
    """Scale each row to unit RMS; all-zero rows stay zero."""
    windows = np.asarray(windows, dtype=float)
    rms = np.sqrt(np.mean(windows**2, axis=-1, keepdims=True))
    return np.divide(windows, rms, out=np.zeros_like(windows), where=rms > 0)


def balanced_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    bits = np.zeros(n, dtype=np.uint8)
    bits[: n // 2] = 1
    return rng.permutation(bits)


def _resample(windows: np.ndarray, width: int) -> np.ndarray:
    n = windows.shape[1]
    if n == width:
        return windows
    src = np.arange(n) / n
    dst = np.arange(width) / width
    return np.stack([np.interp(dst, src, row) for row in windows])


def _noisy_windows(cfg: ModemConfig, bits, snr_db: float, seed: int) -> np.ndarray:
    wave = add_awgn(fsk_modulate(bits, cfg), NoiseSpec.snr(snr_db, seed))
    return symbol_windows(wave, cfg)


def generate_dataset(
    modem_cfg: ModemConfig,
    snr_grid_db: Sequence[float],
    symbols_per_snr: int,
    seed: int,
    augment_rates: Optional[Sequence[int]] = None,
    width: int = LAYER_SIZES[0],
) -> Dataset:
    """Noisy 2FSK symbol windows over an SNR grid, labelled with the sent bit.

    With ``augment_rates`` the symbols at each SNR are split between modem
    variants running at those samples-per-symbol, and every window is
    linearly resampled to ``width`` points.
    """
    rates = tuple(augment_rates) if augment_rates else (modem_cfg.samples_per_symbol,)
    inputs, labels, snrs = [], [], []
    for i, snr in enumerate(snr_grid_db):
        point_seed = derive_seed(seed, i)
        rng = np.random.Generator(np.random.PCG64([point_seed, 1]))
        bits = balanced_bits(symbols_per_snr, rng)
        chunks = np.array_split(np.arange(symbols_per_snr), len(rates))
        for j, (n_rate, idx) in enumerate(zip(rates, chunks)):
            if not len(idx):
                continue
            cfg = replace(modem_cfg, sample_rate=n_rate * modem_cfg.symbol_rate)
            noise_seed = derive_seed(point_seed, (j + 1) << 32)
            windows = _resample(_noisy_windows(cfg, bits[idx], snr, noise_seed), width)
            inputs.append(normalize_windows(windows))
            labels.append(bits[idx])
        snrs.append(np.full(symbols_per_snr, float(snr)))
    return Dataset(np.concatenate(inputs), np.concatenate(labels), np.concatenate(snrs))


def nn_demodulate(model: MlpModel, wave: Waveform, modem_cfg: ModemConfig) -> np.ndarray:
    """Per-symbol decision: 1 iff P(bit=1) > 0.5 (a probability of exactly 0.5 gives 0)."""
    windows = symbol_windows(wave, modem_cfg)
    if windows.shape[1] != model.input_width:
        windows = _resample(windows, model.input_width)
    if not len(windows):
        return np.zeros(0, dtype=np.uint8)
    return (forward(model, normalize_windows(windows)) > 0.5).astype(np.uint8)


def save_model(model: MlpModel, path) -> None:
    lines = [
        MAGIC,
        " ".join(str(n) for n in model.layer_sizes),
        f"# hidden={model.hidden_activation} output={model.output_activation}",
    ]
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"# layer {l}: {w.shape[1]} -> {w.shape[0]}, bias then weights")
        for row, bias in zip(w, b):
            lines.append(" ".join(format(float(v), ".17g") for v in (bias, *row)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> MlpModel:
    raw = Path(path).read_text().splitlines()
    if not raw or raw[0].strip() != MAGIC:
        found = raw[0].strip() if raw else "<empty file>"
        raise ModelVersionError(f"{path}: expected '{MAGIC}', found {found!r}")
    body = [ln for ln in raw[1:] if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise ModelFormatError(f"{path}: missing layer sizes")
    try:
        sizes = tuple(int(tok) for tok in body[0].split())
    except ValueError as exc:
        raise ModelFormatError(f"{path}: bad layer-size line {body[0]!r}") from exc
    if sizes != LAYER_SIZES:
        raise ModelDimensionError(f"{path}: layer sizes {sizes}, expected {LAYER_SIZES}")
    rows = body[1:]
    expected = sum(sizes[1:])
    if len(rows) != expected:
        raise ModelFormatError(f"{path}: {len(rows)} neuron lines, expected {expected}")
    weights, biases = [], []
    pos = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        block = []
        for ln in rows[pos:pos + n_out]:
            try:
                vals = [float(tok) for tok in ln.split()]
            except ValueError as exc:
                raise ModelFormatError(f"{path}: non-numeric value in {ln[:40]!r}") from exc
            if len(vals) != n_in + 1:
                raise ModelDimensionError(
                    f"{path}: neuron line has {len(vals) - 1} weights, expected {n_in}"
                )
            block.append(vals)
        arr = np.array(block)
        if not np.all(np.isfinite(arr)):
            raise ModelFormatError(f"{path}: non-finite parameter")
        biases.append(arr[:, 0].copy())
        weights.append(arr[:, 1:].copy())
        pos += n_out
    return MlpModel(sizes, weights, biases)
