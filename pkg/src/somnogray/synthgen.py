"""Deterministic synthetic cohorts: truth, scorer panels, model output.

Each recording gets a per-epoch difficulty in [0, 1] that drives both
sides of the experiment:

* the model's probability row is a one-hot mixed with the uniform row by
  a weight w = difficulty * Beta(tau, 1); its top probability is then
  1 - 0.8 w and the one-hot stage is the truth exactly with that
  probability, which makes the output perfectly calibrated;
* each scorer votes the truth with probability 1 - difficulty and
  otherwise draws from the confusion row of the true stage; a wrong
  vote is flagged uncertain with probability flag_prob * difficulty.

The difficulty distribution is a Beta with mean chosen so that the
model's expected argmax accuracy equals 1 - model_error_rate. Because
hard epochs are hard for the model and the scorers at once, flagged
(known-uncertainty) regions overlap model gray areas more than
unflagged ones, and excluding high-uncertainty epochs raises accuracy:
the two phenomena the evaluation experiments measure.

Everything is reproducible: one seed fans out to per-recording
generators, and identical configs give byte-identical datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EpochGrid, Hypnodensity, Hypnogram, N_STAGES, ScorerPanel
from .edf import ChannelSignal
from .errors import InvalidConfig

__all__ = [
    "SynthConfig",
    "SynthRecording",
    "DEFAULT_TRANSITION",
    "DEFAULT_CONFUSION",
    "generate",
    "generate_signals",
    "stationary_distribution",
    "SIGNAL_FS",
    "SIGNAL_CHANNELS",
]

#: Stage persistence with N1 as the main hub between stages.
DEFAULT_TRANSITION = (
    (0.88, 0.08, 0.02, 0.01, 0.01),
    (0.05, 0.80, 0.10, 0.01, 0.04),
    (0.01, 0.06, 0.85, 0.05, 0.03),
    (0.01, 0.01, 0.08, 0.89, 0.01),
    (0.02, 0.06, 0.02, 0.01, 0.89),
)

#: Scorer error mass concentrated on N1 and its neighbors.
DEFAULT_CONFUSION = (
    (0.85, 0.10, 0.03, 0.01, 0.01),
    (0.12, 0.70, 0.12, 0.01, 0.05),
    (0.02, 0.10, 0.80, 0.05, 0.03),
    (0.01, 0.02, 0.12, 0.84, 0.01),
    (0.03, 0.10, 0.02, 0.01, 0.84),
)

#: Concentration of the per-epoch difficulty Beta distribution.
DIFFICULTY_CONCENTRATION = 4.0

SIGNAL_FS = 128.0
SIGNAL_CHANNELS = ("EEG C4-M1", "EOG E1-M2")

# per-stage band weight templates (delta, theta, alpha, sigma, beta)
# and RMS amplitude in uV; N3 is delta-heavy, Wake is not
_BAND_WEIGHTS = np.array(
    [
        (0.10, 0.15, 0.30, 0.15, 0.30),
        (0.25, 0.40, 0.15, 0.10, 0.10),
        (0.42, 0.20, 0.10, 0.23, 0.05),
        (0.78, 0.10, 0.05, 0.04, 0.03),
        (0.30, 0.42, 0.13, 0.05, 0.10),
    ]
)
_STAGE_AMPLITUDE = np.array([30.0, 35.0, 45.0, 70.0, 35.0])
_SIGNAL_BANDS = ((0.3, 4.0), (4.0, 8.0), (8.0, 12.0), (12.0, 16.0), (16.0, 30.0))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    n_recordings: int = 50
    epochs_per_recording: int = 900
    transition: tuple = DEFAULT_TRANSITION
    scorer_count: int = 10
    scorer_confusion: tuple = DEFAULT_CONFUSION
    flag_prob: float = 0.4
    temperature: float = 1.0
    model_error_rate: float = 0.18

    def __post_init__(self):
        for name, value in (
            ("n_recordings", self.n_recordings),
            ("epochs_per_recording", self.epochs_per_recording),
            ("scorer_count", self.scorer_count),
        ):
            if int(value) < 1:
                raise InvalidConfig(f"{name} must be >= 1, got {value}")
        for name, m in (("transition", self.transition), ("scorer_confusion", self.scorer_confusion)):
            arr = np.asarray(m, dtype=np.float64)
            if arr.shape != (N_STAGES, N_STAGES):
                raise InvalidConfig(f"{name} must be 5x5, got shape {arr.shape}")
            if (arr < 0).any():
                raise InvalidConfig(f"{name} must be non-negative")
            if np.abs(arr.sum(axis=1) - 1.0).max() > 1e-9:
                raise InvalidConfig(f"{name} rows must sum to 1 within 1e-9")
        if not (self.temperature > 0):
            raise InvalidConfig(f"temperature must be > 0, got {self.temperature}")
        if not (0.0 <= self.flag_prob <= 1.0):
            raise InvalidConfig(f"flag_prob must be in [0, 1], got {self.flag_prob}")
        if self.model_error_rate < 0:
            raise InvalidConfig(f"model_error_rate must be >= 0, got {self.model_error_rate}")
        if self.mean_difficulty >= 1.0:
            bound = 0.8 * self.temperature / (1.0 + self.temperature)
            raise InvalidConfig(
                f"model_error_rate {self.model_error_rate} too high for temperature "
                f"{self.temperature}; needs error_rate < {bound:.4f}"
            )

    @property
    def mean_difficulty(self) -> float:
        """Difficulty mean making E[argmax accuracy] = 1 - error rate."""
        t = self.temperature
        return 1.25 * self.model_error_rate * (1.0 + t) / t


@dataclass(frozen=True)
class SynthRecording:
    recording_id: str
    truth: Hypnogram
    panel: ScorerPanel
    model: Hypnodensity
    signals: tuple | None = None


def stationary_distribution(transition) -> np.ndarray:
    """Stationary row vector of a row-stochastic matrix, by power iteration."""
    T = np.asarray(transition, dtype=np.float64)
    v = np.full(N_STAGES, 1.0 / N_STAGES)
    for _ in range(200):
        v = v @ T
        v = v / v.sum()
    return v


def _categorical_rows(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Draw one category per row of probabilities using uniform samples."""
    cum = np.cumsum(rows, axis=1)
    return (u[:, None] > cum).sum(axis=1).clip(0, N_STAGES - 1)


def _markov_chain(T: np.ndarray, start: np.ndarray, n: int, rng) -> np.ndarray:
    cum_rows = np.cumsum(T, axis=1)
    cum_start = np.cumsum(start)
    u = rng.random(n)
    stages = np.empty(n, dtype=np.int8)
    stages[0] = int(np.searchsorted(cum_start, u[0]))
    for t in range(1, n):
        stages[t] = int(np.searchsorted(cum_rows[stages[t - 1]], u[t]))
    np.clip(stages, 0, N_STAGES - 1, out=stages)
    return stages


def _one_recording(cfg: SynthConfig, recording_id: str, rng, with_signals: bool):
    n = cfg.epochs_per_recording
    T = np.asarray(cfg.transition, dtype=np.float64)
    conf = np.asarray(cfg.scorer_confusion, dtype=np.float64)
    grid = EpochGrid(epoch_count=n, recording_id=recording_id)

    truth_stages = _markov_chain(T, stationary_distribution(T), n, rng)
    truth = Hypnogram(grid, truth_stages)

    # per-epoch difficulty and the model's uniform-mix weight
    mu = cfg.mean_difficulty
    if mu > 0:
        kd = DIFFICULTY_CONCENTRATION
        difficulty = rng.beta(kd * mu, kd * (1.0 - mu), size=n)
    else:
        difficulty = np.zeros(n)
    mix = difficulty * rng.beta(cfg.temperature, 1.0, size=n)

    # the one-hot stage equals truth exactly with the row's top probability,
    # so predicted confidence is calibrated by construction
    top_p = 1.0 - 0.8 * mix
    correct = rng.random(n) < top_p
    offsets = rng.integers(1, N_STAGES, size=n)
    peak = np.where(correct, truth_stages, (truth_stages + offsets) % N_STAGES)
    probs = np.full((n, N_STAGES), mix[:, None] / N_STAGES)
    probs[np.arange(n), peak] += 1.0 - mix
    model = Hypnodensity(grid, probs)

    scorers = []
    for k in range(cfg.scorer_count):
        misread = rng.random(n) < difficulty
        confused = _categorical_rows(conf[truth_stages], rng.random(n))
        votes = np.where(misread, confused, truth_stages).astype(np.int8)
        wrong = votes != truth_stages
        flagged = wrong & (rng.random(n) < cfg.flag_prob * difficulty)
        scorers.append((f"s{k:02d}", Hypnogram(grid, votes, flagged)))
    panel = ScorerPanel(grid, tuple(scorers))

    signals = None
    if with_signals:
        signals = tuple(_signals_for(truth_stages, rng))
    return SynthRecording(recording_id, truth, panel, model, signals)


def generate(cfg: SynthConfig = SynthConfig(), with_signals: bool = False):
    """Build the full dataset: one SynthRecording per recording.

    Per-recording generators are spawned from the config seed, so output
    is byte-identical across runs and platforms for a fixed config.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_recordings)
    dataset = []
    for i, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        rid = f"synth-{i:03d}"
        dataset.append(_one_recording(cfg, rid, rng, with_signals))
    return dataset


def _signals_for(truth_stages: np.ndarray, rng) -> list:
    n_epochs = truth_stages.size
    samples_per_epoch = int(SIGNAL_FS) * 30
    freqs = np.fft.rfftfreq(samples_per_epoch, d=1.0 / SIGNAL_FS)
    band_masks = [(freqs >= lo) & (freqs < hi) for lo, hi in _SIGNAL_BANDS]

    sigma = np.zeros((N_STAGES, freqs.size))
    for s in range(N_STAGES):
        for b, mask in enumerate(band_masks):
            sigma[s, mask] = np.sqrt(_BAND_WEIGHTS[s, b] / mask.sum())

    channels = []
    for c, label in enumerate(SIGNAL_CHANNELS):
        amp_scale = 1.0 if c == 0 else 0.8
        out = np.empty(n_epochs * samples_per_epoch)
        re = rng.standard_normal((n_epochs, freqs.size))
        im = rng.standard_normal((n_epochs, freqs.size))
        jitter = np.exp(0.2 * rng.standard_normal(n_epochs))
        for e in range(n_epochs):
            s = int(truth_stages[e])
            spectrum = sigma[s] * (re[e] + 1j * im[e])
            x = np.fft.irfft(spectrum, n=samples_per_epoch)
            rms = np.sqrt(np.mean(x * x))
            target = _STAGE_AMPLITUDE[s] * jitter[e] * amp_scale
            if rms > 0:
                x = x * (target / rms)
            out[e * samples_per_epoch : (e + 1) * samples_per_epoch] = x
        channels.append(ChannelSignal(label, SIGNAL_FS, out))
    return channels


def generate_signals(truth: Hypnogram, cfg: SynthConfig = SynthConfig(), seed=None):
    """Band-characteristic signals for a given true hypnogram.

    Each epoch emits noise whose spectrum follows its stage's band
    template (N3 dominated by delta, Wake by alpha and beta), so a
    spectral-feature stager can learn the stages. Deterministic for a
    fixed seed; defaults to the config seed.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed if seed is None else seed))
    return list(_signals_for(np.asarray(truth.stages), rng))
