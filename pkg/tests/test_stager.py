"""Feature extraction, softmax training loop, and recording-level staging."""

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from somnogray.core import Stage
from somnogray.edf import ChannelSignal
from somnogray.errors import (
    DegenerateLabels,
    DimensionMismatch,
    GridMismatch,
    InvariantViolation,
    NoEligibleChannels,
    NonFiniteLoss,
)
from somnogray.optim import AdamW
from somnogray.preproc import EpochedChannel
from somnogray.stager import (
    FEATURE_NAMES,
    LOG_FLOOR,
    EpochFeatures,
    SoftmaxModel,
    TrainConfig,
    apply,
    cross_entropy,
    extract_features,
    learning_rate_at,
    load_model,
    save_model,
    softmax,
    stage_recording,
    train,
)

from .conftest import grid, hypnogram

FS = 64.0
EPOCH_N = 1920


def epoched(rows, label="EEG", rid="rec"):
    rows = np.asarray(rows, dtype=np.float64)
    return EpochedChannel(label, grid(rows.shape[0], rid), rows)


def tone_epoch(freq, amp=1.0, phase=0.0):
    t = np.arange(EPOCH_N) / FS
    return amp * np.sin(2 * np.pi * freq * t + phase)


class TestFeatures:
    def test_shape_and_names(self, rng):
        e = epoched(rng.normal(size=(3, EPOCH_N)))
        f = extract_features(e)
        assert f.matrix.shape == (3, 8)
        assert len(FEATURE_NAMES) == 8
        assert f.label == "EEG"

    def test_pure_theta_tone_concentrates_band_power(self):
        # a 6 Hz tone puts essentially all power in the 4-8 Hz band
        f = extract_features(epoched([tone_epoch(6.0)]))
        log_powers = f.matrix[0, :5]
        powers = np.exp(log_powers)
        assert powers[1] / powers.sum() > 0.95

    def test_white_noise_entropy_high(self, rng):
        e = epoched(rng.normal(size=(50, EPOCH_N)))
        entropy = extract_features(e).matrix[:, 6]
        assert entropy.min() >= 0.95

    def test_tone_entropy_low(self):
        f = extract_features(epoched([tone_epoch(6.0)]))
        assert f.matrix[0, 6] < 0.35

    def test_all_zero_epoch_hits_floor(self):
        f = extract_features(epoched([np.zeros(EPOCH_N)]))
        row = f.matrix[0]
        floor = math.log(LOG_FLOOR)
        np.testing.assert_allclose(row[:6], floor, atol=1e-12)
        assert row[6] == 0.0  # entropy of silence defined as 0
        assert row[7] == 0.0  # IQR
        assert np.isfinite(row).all()

    def test_iqr_feature(self):
        data = np.tile(np.array([1.0, 2.0, 3.0, 4.0]), EPOCH_N // 4)
        f = extract_features(epoched([data]))
        assert f.matrix[0, 7] == pytest.approx(1.5)

    def test_finiteness_enforced(self):
        with pytest.raises(InvariantViolation):
            EpochFeatures(grid(1), "C", np.full((1, 8), np.nan))

    def test_shape_enforced(self, rng):
        with pytest.raises(InvariantViolation):
            EpochFeatures(grid(2), "C", rng.normal(size=(2, 7)))


class TestSoftmaxAndLoss:
    def test_softmax_rows_normalized(self, rng):
        p = softmax(rng.normal(size=(40, 5)) * 10)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert (p >= 0).all()

    def test_softmax_shift_invariant(self, rng):
        z = rng.normal(size=(10, 5))
        np.testing.assert_allclose(softmax(z), softmax(z + 123.0), atol=1e-12)

    def test_softmax_saturation_is_finite(self):
        p = softmax(np.array([[1e4, 0.0, 0.0, 0.0, 0.0]]))
        assert np.isfinite(p).all()
        assert p[0, 0] == pytest.approx(1.0)

    def test_gradient_matches_finite_differences(self, rng):
        # central differences on random draws pin the analytic gradient
        eps = 1e-6
        worst = 0.0
        for _ in range(100):
            W = rng.normal(size=(5, 9)) * 0.5
            X = rng.normal(size=(7, 8))
            y = rng.integers(0, 5, size=7)
            _, grad = cross_entropy(W, X, y)
            i = rng.integers(0, 5)
            j = rng.integers(0, 9)
            Wp, Wm = W.copy(), W.copy()
            Wp[i, j] += eps
            Wm[i, j] -= eps
            lp, _ = cross_entropy(Wp, X, y)
            lm, _ = cross_entropy(Wm, X, y)
            worst = max(worst, abs((lp - lm) / (2 * eps) - grad[i, j]))
        assert worst < 1e-5

    def test_loss_at_uniform_weights(self):
        X = np.zeros((4, 8))
        y = np.array([0, 1, 2, 3])
        loss, _ = cross_entropy(np.zeros((5, 9)), X, y)
        assert loss == pytest.approx(math.log(5.0), abs=1e-12)


class TestSchedule:
    @pytest.mark.parametrize(
        "epoch,expected", [(0, 0.01), (19, 0.01), (20, 0.005), (39, 0.005), (40, 0.0025)]
    )
    def test_halving_every_20(self, epoch, expected):
        assert learning_rate_at(epoch, TrainConfig()) == pytest.approx(expected, rel=1e-12)


class TestOptimizer:
    def test_equals_adam_when_decay_zero(self, rng):
        # hand-rolled Adam reference
        shape = (3, 4)
        W = rng.normal(size=shape)
        opt = AdamW(shape, weight_decay=0.0)
        m = np.zeros(shape)
        v = np.zeros(shape)
        ref = W.copy()
        for t in range(1, 6):
            g = rng.normal(size=shape)
            W = opt.step(W, g, 0.01)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            m_hat = m / (1 - 0.9**t)
            v_hat = v / (1 - 0.999**t)
            ref = ref - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8)
            np.testing.assert_allclose(W, ref, atol=1e-15)

    def test_lr_zero_freezes_parameters(self, rng):
        shape = (2, 3)
        W0 = rng.normal(size=shape)
        opt = AdamW(shape, weight_decay=0.5)
        W = W0.copy()
        for _ in range(4):
            W = opt.step(W, rng.normal(size=shape), 0.0)
        np.testing.assert_array_equal(W, W0)

    def test_decay_mask_exempts_bias(self):
        shape = (1, 2)
        mask = np.array([[1.0, 0.0]])
        opt = AdamW(shape, weight_decay=1.0, decay_mask=mask)
        W = np.array([[2.0, 2.0]])
        W2 = opt.step(W, np.zeros(shape), 0.1)
        assert W2[0, 0] < 2.0  # decayed
        assert W2[0, 1] == 2.0  # exempt, zero gradient


def separable_dataset(n_recordings=6, n_epochs=60, seed=0):
    """Synthetic features where each stage occupies its own region."""
    rng = np.random.default_rng(seed)
    feats, labels = [], []
    for r in range(n_recordings):
        rid = f"rec{r:02d}"
        y = rng.integers(0, 5, size=n_epochs)
        X = rng.normal(scale=0.05, size=(n_epochs, 8))
        X[np.arange(n_epochs), y % 8] += 3.0
        feats.append(EpochFeatures(grid(n_epochs, rid), "EEG", X))
        labels.append(hypnogram(y, rid=rid))
    return feats, labels


class TestTrain:
    def test_separable_data_high_accuracy(self):
        feats, labels = separable_dataset()
        model = train(feats, labels, TrainConfig(max_epochs=40))
        assert model.training_meta["best_val_accuracy"] >= 0.99

    def test_validation_split_is_last_fifth_by_id(self):
        feats, labels = separable_dataset(n_recordings=5)
        model = train(feats, labels, TrainConfig(max_epochs=1))
        assert model.training_meta["val_recordings"] == ["rec04"]

    def test_explicit_validation_recordings(self):
        feats, labels = separable_dataset(n_recordings=4)
        model = train(feats, labels, TrainConfig(max_epochs=1), val_recordings=["rec01"])
        assert model.training_meta["val_recordings"] == ["rec01"]

    def test_shuffled_labels_near_chance(self):
        # destroying the feature-label link caps accuracy at ~1/5
        rng = np.random.default_rng(1)
        feats, labels = [], []
        for r in range(10):
            rid = f"rec{r:02d}"
            y = rng.integers(0, 5, size=400)
            X = rng.normal(size=(400, 8))
            feats.append(EpochFeatures(grid(400, rid), "EEG", X))
            labels.append(hypnogram(y, rid=rid))
        model = train(feats, labels, TrainConfig(max_epochs=40))
        assert abs(model.training_meta["best_val_accuracy"] - 0.2) < 0.1

    def test_deterministic_given_seed(self):
        feats, labels = separable_dataset(n_recordings=3, n_epochs=40)
        cfg = TrainConfig(max_epochs=10, seed=3)
        m1 = train(feats, labels, cfg)
        m2 = train(feats, labels, cfg)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert m1.training_meta["loss_curve"] == m2.training_meta["loss_curve"]

    def test_zero_epochs_gives_uniform_model(self):
        feats, labels = separable_dataset(n_recordings=3, n_epochs=40)
        model = train(feats, labels, TrainConfig(max_epochs=0))
        assert model.training_meta["best_val_accuracy"] is None
        probs = apply(model, feats[0]).probs
        np.testing.assert_allclose(probs, 0.2, atol=1e-12)

    def test_loss_curve_decreases_overall(self):
        feats, labels = separable_dataset(n_recordings=3, n_epochs=60)
        model = train(feats, labels, TrainConfig(max_epochs=30))
        curve = model.training_meta["loss_curve"]
        assert curve[-1] < curve[0]

    def test_single_recording_epoch_split(self):
        feats, labels = separable_dataset(n_recordings=1, n_epochs=100)
        model = train(feats, labels, TrainConfig(max_epochs=5))
        assert model.training_meta["val_recordings"] == []
        assert model.training_meta["best_val_accuracy"] is not None

    def test_single_class_rejected(self):
        feats, _ = separable_dataset(n_recordings=2, n_epochs=20)
        flat = [hypnogram([Stage.N2] * 20, rid=f.grid.recording_id) for f in feats]
        with pytest.raises(DegenerateLabels):
            train(feats, flat, TrainConfig(max_epochs=1))

    def test_unscored_epochs_skipped(self):
        feats, labels = separable_dataset(n_recordings=2, n_epochs=40)
        stages = labels[0].stages.copy()
        stages[::2] = Stage.UNSCORED
        labels = [hypnogram(stages, rid=labels[0].grid.recording_id), labels[1]]
        model = train(feats, labels, TrainConfig(max_epochs=1))
        assert model.weights.shape == (5, 9)

    def test_mismatched_lists_rejected(self):
        feats, labels = separable_dataset(n_recordings=2)
        with pytest.raises(GridMismatch):
            train(feats, labels[:1])
        with pytest.raises(GridMismatch):
            train([], [])

    def test_nonfinite_loss_raised_not_propagated_as_nan(self):
        # absurd learning rate and decay blow the weights up to overflow
        feats, labels = separable_dataset(n_recordings=3, n_epochs=40)
        cfg = TrainConfig(peak_lr=1e18, weight_decay=100.0, max_epochs=60)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(NonFiniteLoss):
                train(feats, labels, cfg)

    def test_config_validation(self):
        with pytest.raises(InvariantViolation):
            TrainConfig(peak_lr=0.0)
        with pytest.raises(InvariantViolation):
            TrainConfig(weight_decay=-0.1)
        with pytest.raises(InvariantViolation):
            TrainConfig(max_epochs=-1)
        with pytest.raises(InvariantViolation):
            TrainConfig(batch_size=0)


class TestApply:
    def test_dimension_mismatch(self, rng):
        # a (5, 8) weight matrix expects 7 features, one short of ours
        with pytest.raises(DimensionMismatch):
            apply(SoftmaxModel(np.zeros((5, 8))), feature_stub(rng, 8))

    def test_saturated_inputs_stay_finite(self, rng):
        W = np.zeros((5, 9))
        W[2, 0] = 1.0
        model = SoftmaxModel(W)
        X = np.full((3, 8), 1e4)
        h = apply(model, EpochFeatures(grid(3), "C", X))
        assert np.isfinite(h.probs).all()
        assert h.probs[:, 2] == pytest.approx(1.0)

    def test_grid_carried(self, rng):
        model = SoftmaxModel(np.zeros((5, 9)))
        f = feature_stub(rng, 8, n=4, rid="abc")
        h = apply(model, f)
        assert h.grid.recording_id == "abc"
        assert h.probs.shape == (4, 5)


def feature_stub(rng, d, n=2, rid="rec"):
    return EpochFeatures(grid(n, rid), "C", rng.normal(size=(n, d)))


class TestStageRecording:
    def make_signal(self, label, seed, duration_s=95.0):
        rng = np.random.default_rng(seed)
        return ChannelSignal(label, 256.0, rng.normal(size=int(256 * duration_s)))

    def trained_model(self):
        feats, labels = separable_dataset(n_recordings=3, n_epochs=40)
        return train(feats, labels, TrainConfig(max_epochs=2))

    def test_two_identical_channels_match_single(self):
        model = self.trained_model()
        s = self.make_signal("EEG A", 5)
        s2 = ChannelSignal("EEG B", s.fs, s.samples)
        single = stage_recording([s], model, "r")
        double = stage_recording([s, s2], model, "r")
        np.testing.assert_allclose(double.probs, single.probs, atol=1e-12)

    def test_channel_filter(self):
        model = self.trained_model()
        a = self.make_signal("EEG A", 5)
        b = self.make_signal("EMG", 6)
        only_a = stage_recording([a, b], model, "r", channels=["EEG A"])
        just_a = stage_recording([a], model, "r")
        np.testing.assert_array_equal(only_a.probs, just_a.probs)

    def test_no_eligible_channels(self):
        model = self.trained_model()
        a = self.make_signal("EEG A", 5)
        with pytest.raises(NoEligibleChannels):
            stage_recording([a], model, "r", channels=["EOG"])
        with pytest.raises(NoEligibleChannels):
            stage_recording([], model, "r")


class TestPersistence:
    def test_round_trip(self, tmp_path, rng):
        feats, labels = separable_dataset(n_recordings=3, n_epochs=40)
        model = train(feats, labels, TrainConfig(max_epochs=3))
        path = tmp_path / "model.npz"
        save_model(path, model)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.weights, model.weights)
        assert loaded.training_meta == model.training_meta

    def test_apply_after_reload(self, tmp_path, rng):
        feats, labels = separable_dataset(n_recordings=3, n_epochs=40)
        model = train(feats, labels, TrainConfig(max_epochs=3))
        path = tmp_path / "model.npz"
        save_model(path, model)
        f = feats[0]
        np.testing.assert_array_equal(apply(load_model(path), f).probs, apply(model, f).probs)
