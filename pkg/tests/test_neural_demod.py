import math

import numpy as np
import pytest

from electrocomm.errors import (
    FramingError,
    ModelDimensionError,
    ModelFormatError,
    ModelVersionError,
    ShapeError,
    TrainingDivergedError,
)
from electrocomm.modem import ModemConfig, Waveform, fsk_modulate
from electrocomm.neural_demod import (
    LAYER_SIZES,
    Dataset,
    MlpModel,
    TrainConfig,
    backprop_gradients,
    forward,
    generate_dataset,
    init_model,
    load_model,
    nn_demodulate,
    normalize_windows,
    save_model,
    train,
)

from conftest import finite_difference_grads, max_relative_error


def zero_model():
    m = init_model(0)
    for p in m.parameters():
        p[...] = 0.0
    return m


def snr0_dataset(n=4000, seed=1):
    return generate_dataset(ModemConfig(), [0.0], n, seed)


class TestInit:
    def test_deterministic(self):
        a, b = init_model(42), init_model(42)
        for p, q in zip(a.parameters(), b.parameters()):
            assert np.array_equal(p, q)
        assert not np.array_equal(init_model(43).weights[0], a.weights[0])

    def test_biases_zero(self):
        assert all(np.all(b == 0) for b in init_model(7).biases)

    def test_weight_bounds(self):
        m = init_model(3)
        assert sum(w.size for w in m.weights) >= 1000
        for w, (n_in, n_out) in zip(m.weights, zip(LAYER_SIZES[:-1], LAYER_SIZES[1:])):
            assert np.all(np.abs(w) <= math.sqrt(6 / (n_in + n_out)))

    def test_shape_validation(self):
        m = init_model(0)
        with pytest.raises(ShapeError):
            MlpModel(LAYER_SIZES, [m.weights[0].T, *m.weights[1:]], m.biases)


class TestForward:
    def test_zero_model_is_half(self):
        x = np.random.default_rng(0).normal(size=30)
        assert forward(zero_model(), x) == 0.5

    def test_open_unit_interval(self):
        # float64 sigmoid rounds to exactly 0 or 1 beyond |logit| ~ 37, so stay below that
        m = init_model(5)
        m.weights[-1] *= 3
        p = forward(m, np.random.default_rng(1).normal(size=(200, 30)) * 10)
        assert np.all((p > 0) & (p < 1))

    @pytest.mark.parametrize("shape", [(29,), (4, 31), (2, 3, 30)])
    def test_wrong_width(self, shape):
        with pytest.raises(ShapeError):
            forward(init_model(0), np.zeros(shape))

    def test_trained_clean_symbols(self, trained_default, modem_cfg):
        model, _ = trained_default
        f1 = normalize_windows(modem_cfg.carrier(modem_cfg.f1))
        f2 = normalize_windows(modem_cfg.carrier(modem_cfg.f2))
        assert forward(model, f2) > 0.99
        assert forward(model, f2) - forward(model, f1) >= 0.98


class TestBackprop:
    def test_symmetric_stationary_point(self):
        x = np.random.default_rng(2).normal(size=(4, 30))
        batch = np.vstack([x, -x])
        y = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        _, b_grads, _ = backprop_gradients(zero_model(), batch, y)
        assert abs(b_grads[-1][0]) < 1e-15

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        m = init_model(11)
        for b in m.biases:
            b[:] = rng.normal(0, 0.1, b.shape)
        x, y = rng.normal(size=(4, 30)), rng.integers(0, 2, 4)
        aw, ab, _ = backprop_gradients(m, x, y)
        nw, nb = finite_difference_grads(m, x, y)
        assert max_relative_error(aw + ab, nw + nb) < 1e-4

    def test_dead_input_has_zero_gradient(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(8, 30))
        x[:, 7] = 0.0
        w_grads, _, _ = backprop_gradients(init_model(1), x, rng.integers(0, 2, 8))
        assert np.all(w_grads[0][:, 7] == 0.0)

    def test_loss_is_returned(self):
        x = np.zeros((2, 30))
        _, _, loss = backprop_gradients(zero_model(), x, [0, 1])
        assert loss == pytest.approx(math.log(2), rel=1e-15)


class TestDataset:
    def test_size_and_normalization(self):
        ds = generate_dataset(ModemConfig(), [-5.0, 0.0, 5.0], 300, seed=4)
        assert len(ds) == 900
        assert ds.inputs.shape == (900, 30)
        rms = np.sqrt(np.mean(ds.inputs**2, axis=1))
        assert np.all((np.abs(rms - 1) < 1e-9) | (rms == 0))

    def test_label_balance(self):
        ds = generate_dataset(ModemConfig(), [0.0, 10.0], 1000, seed=9)
        for snr in (0.0, 10.0):
            frac = ds.labels[ds.snr_db == snr].mean()
            assert 0.45 <= frac <= 0.55

    def test_labels_match_clean_symbols(self):
        ds = generate_dataset(ModemConfig(), [60.0], 200, seed=1)
        cfg = ModemConfig()
        f2 = normalize_windows(cfg.carrier(cfg.f2))
        corr = ds.inputs @ f2
        assert np.all((corr > 15) == (ds.labels == 1))

    def test_deterministic(self):
        a = generate_dataset(ModemConfig(), [0.0], 100, seed=3)
        b = generate_dataset(ModemConfig(), [0.0], 100, seed=3)
        assert a.inputs.tobytes() == b.inputs.tobytes()

    def test_sampling_rate_augmentation(self):
        ds = generate_dataset(ModemConfig(), [20.0], 300, seed=1, augment_rates=(24, 30, 36))
        assert ds.inputs.shape == (300, 30)
        # symbols are split into thirds by native rate; the middle third is native 30 samples/symbol
        cfg = ModemConfig()
        f1 = normalize_windows(cfg.carrier(cfg.f1))
        assert np.all(np.abs(ds.inputs[100:200] @ f1)[ds.labels[100:200] == 0] > 25)
        assert len(ds.labels) == len(ds.snr_db)

    def test_zero_window_stays_zero(self):
        np.testing.assert_array_equal(normalize_windows(np.zeros((2, 30))), np.zeros((2, 30)))


@pytest.fixture(scope="module")
def snr0_run():
    ds = snr0_dataset()
    tc = TrainConfig(snr_grid_db=(0.0,), symbols_per_snr=4000)
    return train(init_model(tc.seed), ds, tc)


class TestTrain:
    def test_untrained_loss_near_ln2(self, snr0_run):
        _, history = snr0_run
        assert history[0] == pytest.approx(math.log(2), abs=0.05)
        assert len(history) == 201

    def test_converges(self, snr0_run):
        _, history = snr0_run
        assert history[-1] < 0.1 * history[0]

    def test_deterministic(self):
        ds = snr0_dataset(512)
        tc = TrainConfig(epochs=5)
        _, h1 = train(init_model(1), ds, tc)
        _, h2 = train(init_model(1), ds, tc)
        assert h1 == h2

    def test_does_not_mutate_input(self):
        m = init_model(1)
        before = m.weights[0].copy()
        train(m, snr0_dataset(128), TrainConfig(epochs=1))
        assert np.array_equal(m.weights[0], before)

    def test_divergence_reports_epoch(self):
        ds = snr0_dataset(128)
        ds.inputs[5, 3] = np.nan
        with pytest.raises(TrainingDivergedError) as err, np.errstate(invalid="ignore"):
            train(init_model(1), ds, TrainConfig(epochs=3))
        assert err.value.epoch == 1

    def test_unbalanced_rejected(self):
        ds = snr0_dataset(100)
        with pytest.raises(ValueError, match="unbalanced"):
            train(init_model(1), Dataset(ds.inputs, np.ones(100)), TrainConfig(epochs=1))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            train(init_model(1), Dataset(np.zeros((0, 30)), np.zeros(0)), TrainConfig(epochs=1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(snr_grid_db=())
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)


class TestDemodulate:
    def test_clean_stream_error_free(self, trained_default, modem_cfg):
        bits = np.random.default_rng(8).integers(0, 2, 10_000)
        rx = nn_demodulate(trained_default[0], fsk_modulate(bits, modem_cfg), modem_cfg)
        assert np.array_equal(rx, bits)

    def test_tie_decodes_zero(self, modem_cfg):
        rx = nn_demodulate(zero_model(), fsk_modulate([1, 1, 0], modem_cfg), modem_cfg)
        assert list(rx) == [0, 0, 0]

    def test_length(self, modem_cfg):
        assert len(nn_demodulate(init_model(0), fsk_modulate([0] * 17, modem_cfg), modem_cfg)) == 17

    def test_misaligned(self, modem_cfg):
        with pytest.raises(FramingError):
            nn_demodulate(init_model(0), Waveform(np.zeros(45), modem_cfg.sample_rate), modem_cfg)

    @pytest.mark.parametrize("scale", [1e-6, 0.37, 1.0, 250.0])
    def test_scale_invariance(self, trained_default, modem_cfg, scale):
        from electrocomm.channel_sim import NoiseSpec, add_awgn

        bits = np.random.default_rng(1).integers(0, 2, 2000)
        noisy = add_awgn(fsk_modulate(bits, modem_cfg), NoiseSpec.snr(-6.0, seed=4))
        base = nn_demodulate(trained_default[0], noisy, modem_cfg)
        assert np.array_equal(nn_demodulate(trained_default[0], noisy.scaled(scale), modem_cfg), base)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        m = init_model(21)
        m.biases[1][:] = np.random.default_rng(0).normal(size=10)
        path = tmp_path / "m.ecmlp"
        save_model(m, path)
        back = load_model(path)
        for p, q in zip(m.parameters(), back.parameters()):
            assert np.array_equal(p, q)
        x = np.random.default_rng(1).normal(size=(100, 30))
        assert np.array_equal(forward(m, x), forward(back, x))

    def test_format(self, tmp_path):
        path = tmp_path / "m.ecmlp"
        save_model(init_model(0), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "ECMLP v1"
        assert lines[1] == "30 28 10 1"
        neuron_lines = [ln for ln in lines[2:] if not ln.startswith("#")]
        assert len(neuron_lines) == 28 + 10 + 1
        assert len(neuron_lines[0].split()) == 31

    def test_truncated(self, tmp_path):
        path = tmp_path / "m.ecmlp"
        save_model(init_model(0), path)
        text = path.read_text().splitlines()
        path.write_text("\n".join(text[:-5]) + "\n")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "m.ecmlp"
        save_model(init_model(0), path)
        path.write_text(path.read_text().replace("ECMLP v1", "ECMLP v2", 1))
        with pytest.raises(ModelVersionError):
            load_model(path)

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "m.ecmlp"
        save_model(init_model(0), path)
        path.write_text(path.read_text().replace("30 28 10 1", "30 20 10 1", 1))
        with pytest.raises(ModelDimensionError):
            load_model(path)

    def test_short_neuron_line(self, tmp_path):
        path = tmp_path / "m.ecmlp"
        save_model(init_model(0), path)
        lines = path.read_text().splitlines()
        idx = next(i for i, ln in enumerate(lines) if i > 1 and not ln.startswith("#"))
        lines[idx] = " ".join(lines[idx].split()[:-1])
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelDimensionError):
            load_model(path)

    def test_garbage_value(self, tmp_path):
        path = tmp_path / "m.ecmlp"
        save_model(init_model(0), path)
        lines = path.read_text().splitlines()
        lines[-1] = "x" + lines[-1]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError):
            load_model(path)
