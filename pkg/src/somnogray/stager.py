"""Spectral-feature softmax stager.

Each 30-second epoch of a preprocessed channel is summarized by eight
features: log power in five EEG bands, log total power, normalized
spectral entropy, and amplitude IQR. A multinomial softmax classifier
over those features produces the per-epoch stage probabilities, one
channel at a time; channel outputs are then ensemble-averaged.

Training follows a fixed recipe: AdamW, peak learning rate 0.01 halved
every 20 training epochs, categorical cross-entropy, up to 100 epochs,
returning the snapshot with the best validation accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .core import EpochGrid, Hypnodensity, N_STAGES, Stage, ensemble_average
from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    GridMismatch,
    InvariantViolation,
    NoEligibleChannels,
    NonFiniteLoss,
)
from .optim import AdamW
from .preproc import EpochedChannel, PreprocConfig, preprocess_channel

__all__ = [
    "FEATURE_BANDS",
    "FEATURE_NAMES",
    "EpochFeatures",
    "TrainConfig",
    "SoftmaxModel",
    "extract_features",
    "softmax",
    "cross_entropy",
    "learning_rate_at",
    "train",
    "apply",
    "stage_recording",
    "save_model",
    "load_model",
]

FEATURE_BANDS = ((0.3, 4.0), (4.0, 8.0), (8.0, 12.0), (12.0, 16.0), (16.0, 30.0))

FEATURE_NAMES = (
    "log_power_delta",
    "log_power_theta",
    "log_power_alpha",
    "log_power_sigma",
    "log_power_beta",
    "log_power_total",
    "spectral_entropy",
    "amplitude_iqr",
)

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class EpochFeatures:
    """Feature matrix for one channel: one row of 8 features per epoch."""

    grid: EpochGrid
    label: str
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.shape != (self.grid.epoch_count, len(FEATURE_NAMES)):
            raise InvariantViolation(
                f"matrix must be ({self.grid.epoch_count}, {len(FEATURE_NAMES)}), "
                f"got {matrix.shape}"
            )
        if not np.isfinite(matrix).all():
            raise InvariantViolation("features must be finite")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)


@dataclass(frozen=True)
class TrainConfig:
    peak_lr: float = 0.01
    lr_division_factor: float = 2.0
    lr_step_epochs: int = 20
    max_epochs: int = 100
    batch_size: int = 256
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        for name in ("peak_lr", "lr_division_factor", "lr_step_epochs", "batch_size",
                     "beta1", "beta2", "eps"):
            if getattr(self, name) <= 0:
                raise InvariantViolation(f"{name} must be positive, got {getattr(self, name)}")
        if self.weight_decay < 0:
            raise InvariantViolation(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.max_epochs < 0:
            raise InvariantViolation(f"max_epochs must be >= 0, got {self.max_epochs}")


@dataclass(frozen=True)
class SoftmaxModel:
    """Linear softmax classifier; the last weight column is the bias."""

    weights: np.ndarray = field(repr=False)
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != N_STAGES:
            raise InvariantViolation(
                f"weights must be ({N_STAGES}, n_features + 1), got {weights.shape}"
            )
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1


def extract_features(e: EpochedChannel) -> EpochFeatures:
    """Averaged-periodogram band powers plus entropy and amplitude spread.

    The PSD is a segment-averaged periodogram (256-sample segments, half
    overlap) so single-epoch bin noise does not bias the entropy feature.
    Band power integrates the density over lo <= f < hi; log features
    use log(power + 1e-12) so silent epochs hit a finite floor instead
    of -inf.
    """
    fs = 64.0
    freqs, psd = sps.welch(e.data, fs=fs, nperseg=256, axis=1)
    df = freqs[1] - freqs[0]
    cols = []
    for lo, hi in FEATURE_BANDS:
        mask = (freqs >= lo) & (freqs < hi)
        cols.append(np.log(psd[:, mask].sum(axis=1) * df + LOG_FLOOR))
    total = psd.sum(axis=1) * df
    cols.append(np.log(total + LOG_FLOOR))

    norm = psd.sum(axis=1, keepdims=True)
    safe = np.where(norm > 0, norm, 1.0)
    pk = psd / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pk > 0, pk * np.log2(np.maximum(pk, 1e-300)), 0.0)
    entropy = np.where(
        norm[:, 0] > 0, -terms.sum(axis=1) / math.log2(psd.shape[1]), 0.0
    )
    cols.append(entropy)

    q75, q25 = np.percentile(e.data, [75.0, 25.0], axis=1)
    cols.append(q75 - q25)
    return EpochFeatures(e.grid, e.label, np.column_stack(cols))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=1, keepdims=True)


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def cross_entropy(weights: np.ndarray, X: np.ndarray, y: np.ndarray):
    """Mean categorical cross-entropy and its analytic gradient.

    X is (n, d) raw features (bias handled internally), y is an int
    vector of stage codes. Probabilities are floored at 1e-12 inside the
    log. Returns (loss, grad) with grad shaped like weights.
    """
    Xa = _augment(X)
    probs = softmax(Xa @ weights.T)
    n = X.shape[0]
    picked = probs[np.arange(n), y]
    loss = float(-np.mean(np.log(np.maximum(picked, LOG_FLOOR))))
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    grad = delta.T @ Xa / n
    return loss, grad


def learning_rate_at(epoch: int, cfg: TrainConfig) -> float:
    """Step schedule: peak_lr / factor^floor(epoch / step)."""
    return cfg.peak_lr / cfg.lr_division_factor ** (epoch // cfg.lr_step_epochs)


def _collect(features, labels):
    if not isinstance(features, (list, tuple)):
        features = [features]
    if not isinstance(labels, (list, tuple)):
        labels = [labels]
    if len(features) != len(labels) or not features:
        raise GridMismatch("need equal, non-empty feature and label lists")
    pairs = []
    for f, h in zip(features, labels):
        if f.grid != h.grid:
            raise GridMismatch(
                f"features and labels disagree on grid for {f.grid.recording_id!r}"
            )
        keep = h.stages != Stage.UNSCORED
        X = f.matrix[keep]
        y = h.stages[keep].astype(np.intp)
        pairs.append((f.grid.recording_id, X, y))
    return pairs


def train(features, labels, cfg: TrainConfig = TrainConfig(), val_recordings=None) -> SoftmaxModel:
    """Fit the softmax stager and return the best-validation snapshot.

    ``features``/``labels`` are parallel lists (one entry per channel of
    one recording; a recording may contribute several channels). The
    validation split defaults to the last 20% of recordings by id order;
    with a single recording, its last 20% of epochs are held out.
    Standardization statistics come from the training split only and are
    folded back into the returned weights, so apply() works on raw
    features.
    """
    pairs = _collect(features, labels)
    ids = sorted({rid for rid, _, _ in pairs})
    if val_recordings is None:
        if len(ids) >= 2:
            n_val = max(1, int(math.floor(0.2 * len(ids) + 0.5)))
            val_recordings = set(ids[-n_val:])
        else:
            val_recordings = set()
    else:
        val_recordings = set(val_recordings)

    if val_recordings:
        train_pairs = [(r, X, y) for r, X, y in pairs if r not in val_recordings]
        val_pairs = [(r, X, y) for r, X, y in pairs if r in val_recordings]
        if not train_pairs or not val_pairs:
            raise InvariantViolation("validation split leaves an empty side")
        X_tr = np.vstack([X for _, X, _ in train_pairs])
        y_tr = np.concatenate([y for _, _, y in train_pairs])
        X_va = np.vstack([X for _, X, _ in val_pairs])
        y_va = np.concatenate([y for _, _, y in val_pairs])
    else:
        # single recording: hold out the last 20% of its epochs
        X_all = np.vstack([X for _, X, _ in pairs])
        y_all = np.concatenate([y for _, _, y in pairs])
        cut = max(1, int(0.8 * X_all.shape[0]))
        if cut >= X_all.shape[0]:
            cut = X_all.shape[0] - 1
        X_tr, y_tr = X_all[:cut], y_all[:cut]
        X_va, y_va = X_all[cut:], y_all[cut:]

    if X_tr.shape[0] == 0:
        raise DegenerateLabels("no scored training epochs")
    if len(np.unique(y_tr)) < 2:
        raise DegenerateLabels("training labels contain fewer than two classes")

    mu = X_tr.mean(axis=0)
    sigma = X_tr.std(axis=0)
    sigma = np.where(sigma < 1e-12, 1.0, sigma)
    Xs_tr = (X_tr - mu) / sigma
    Xs_va = (X_va - mu) / sigma

    d = X_tr.shape[1]
    W = np.zeros((N_STAGES, d + 1))
    decay_mask = np.ones_like(W)
    decay_mask[:, -1] = 0.0  # bias exempt from decay
    opt = AdamW(
        W.shape,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps=cfg.eps,
        weight_decay=cfg.weight_decay,
        decay_mask=decay_mask,
    )
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    def val_accuracy(weights):
        probs = softmax(_augment(Xs_va) @ weights.T)
        return float((probs.argmax(axis=1) == y_va).mean()) if y_va.size else 0.0

    loss_curve, val_curve = [], []
    best_W, best_acc, best_epoch = W.copy(), -1.0, -1
    n = Xs_tr.shape[0]
    for epoch in range(cfg.max_epochs):
        lr = learning_rate_at(epoch, cfg)
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grad = cross_entropy(W, Xs_tr[idx], y_tr[idx])
            if not math.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
            W = opt.step(W, grad, lr)
        epoch_loss, _ = cross_entropy(W, Xs_tr, y_tr)
        if not math.isfinite(epoch_loss):
            raise NonFiniteLoss(f"loss became {epoch_loss} at epoch {epoch}")
        acc = val_accuracy(W)
        loss_curve.append(epoch_loss)
        val_curve.append(acc)
        if acc > best_acc:
            best_W, best_acc, best_epoch = W.copy(), acc, epoch

    # fold standardization into the weights so apply() takes raw features
    folded = best_W.copy()
    folded[:, :d] = best_W[:, :d] / sigma
    folded[:, d] = best_W[:, d] - best_W[:, :d] @ (mu / sigma)

    meta = {
        "seed": cfg.seed,
        "peak_lr": cfg.peak_lr,
        "lr_division_factor": cfg.lr_division_factor,
        "lr_step_epochs": cfg.lr_step_epochs,
        "max_epochs": cfg.max_epochs,
        "batch_size": cfg.batch_size,
        "weight_decay": cfg.weight_decay,
        "best_epoch": best_epoch,
        "best_val_accuracy": best_acc if cfg.max_epochs > 0 else None,
        "loss_curve": loss_curve,
        "val_accuracy_curve": val_curve,
        "val_recordings": sorted(val_recordings),
        "feature_names": list(FEATURE_NAMES),
    }
    return SoftmaxModel(folded, meta)


def apply(model: SoftmaxModel, features: EpochFeatures) -> Hypnodensity:
    """Stage probabilities for every epoch of one channel."""
    if features.matrix.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got {features.matrix.shape[1]}"
        )
    probs = softmax(_augment(features.matrix) @ model.weights.T)
    return Hypnodensity(features.grid, probs)


def stage_recording(
    signals,
    model: SoftmaxModel,
    recording_id: str,
    cfg: PreprocConfig = PreprocConfig(),
    channels=None,
) -> Hypnodensity:
    """Ensemble hypnodensity for a recording from raw channel signals.

    Each eligible channel runs through preprocessing, feature extraction
    and the model independently; the per-channel hypnodensities are then
    averaged.
    """
    signals = list(signals)
    if channels is not None:
        wanted = set(channels)
        signals = [s for s in signals if s.label in wanted]
    if not signals:
        raise NoEligibleChannels(
            "no channel matches the eligibility filter"
            + (f" {sorted(wanted)}" if channels is not None else "")
        )
    per_channel = []
    for s in signals:
        epoched = preprocess_channel(s, recording_id, cfg)
        per_channel.append(apply(model, extract_features(epoched)))
    return ensemble_average(per_channel)


def save_model(path, model: SoftmaxModel) -> None:
    """Persist weights and metadata to an .npz file."""
    import json

    np.savez(
        path,
        weights=model.weights,
        training_meta=np.frombuffer(
            json.dumps(model.training_meta, sort_keys=True).encode("ascii"), dtype=np.uint8
        ),
    )


def load_model(path) -> SoftmaxModel:
    import json

    with np.load(path) as bundle:
        weights = bundle["weights"]
        meta = json.loads(bytes(bundle["training_meta"].tobytes()).decode("ascii"))
    return SoftmaxModel(weights, meta)
