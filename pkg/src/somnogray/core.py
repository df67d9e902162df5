"""Domain types for sleep-stage probability analysis.

The objects here are shared by every other module:

* :class:`Stage` labels an epoch with one of the five scoreable sleep
  stages (Wake, N1, N2, N3, REM) or the Unscored sentinel.
* :class:`EpochGrid` pins a sequence of 30-second epochs to a recording.
* :class:`Hypnodensity` holds one probability row per epoch over the five
  scoreable stages, in canonical stage order.
* :class:`Hypnogram` holds one stage per epoch plus per-epoch uncertain
  flags.
* :class:`ScorerPanel` aligns hypnograms from several scorers on one grid.

All types are immutable after construction; their numpy arrays are marked
read-only so they can be shared freely between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyEpoch, GridMismatch, InvariantViolation, SimplexViolation

__all__ = [
    "Stage",
    "N_STAGES",
    "STAGE_TOKENS",
    "TOKEN_TO_STAGE",
    "EPOCH_SECONDS",
    "EpochGrid",
    "Hypnodensity",
    "Hypnogram",
    "ScorerPanel",
    "argmax_hypnogram",
    "panel_to_hypnodensity",
    "ensemble_average",
]

#: Number of scoreable stages. Unscored never enters probabilities.
N_STAGES = 5

#: Epoch duration in seconds, fixed across the toolkit.
EPOCH_SECONDS = 30

#: Row-sum tolerance for probability rows.
SIMPLEX_ATOL = 1e-6


class Stage(enum.IntEnum):
    """Sleep stage labels in canonical order.

    The integer values define both the column order of every probability
    matrix and the tiebreak priority (lower value wins a tie).
    """

    WAKE = 0
    N1 = 1
    N2 = 2
    N3 = 3
    REM = 4
    UNSCORED = 5

    @property
    def token(self) -> str:
        return STAGE_TOKENS[self]

    @property
    def scoreable(self) -> bool:
        return self is not Stage.UNSCORED


STAGE_TOKENS = {
    Stage.WAKE: "W",
    Stage.N1: "N1",
    Stage.N2: "N2",
    Stage.N3: "N3",
    Stage.REM: "R",
    Stage.UNSCORED: "U",
}

TOKEN_TO_STAGE = {v: k for k, v in STAGE_TOKENS.items()}


def _frozen_array(values, dtype):
    arr = np.asarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EpochGrid:
    """Epoch layout of one recording.

    Parameters
    ----------
    epoch_count : int
        Number of consecutive 30-second epochs, at least 1.
    recording_id : str
        Opaque identifier for the recording.
    start_time : str or None
        Optional ISO-8601 timestamp of the first epoch's start.
    """

    epoch_count: int
    recording_id: str
    start_time: str | None = None
    epoch_duration_s: int = EPOCH_SECONDS

    def __post_init__(self):
        if self.epoch_duration_s != EPOCH_SECONDS:
            raise InvariantViolation(
                f"epoch_duration_s must be {EPOCH_SECONDS}, got {self.epoch_duration_s}"
            )
        if not isinstance(self.epoch_count, (int, np.integer)) or self.epoch_count < 1:
            raise InvariantViolation(f"epoch_count must be >= 1, got {self.epoch_count!r}")
        object.__setattr__(self, "epoch_count", int(self.epoch_count))


def _check_grid(grid) -> None:
    if not isinstance(grid, EpochGrid):
        raise InvariantViolation(f"expected EpochGrid, got {type(grid).__name__}")


@dataclass(frozen=True)
class Hypnodensity:
    """Per-epoch probability rows over the five scoreable stages."""

    grid: EpochGrid
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_grid(self.grid)
        probs = _frozen_array(self.probs, np.float64)
        if probs.ndim != 2 or probs.shape != (self.grid.epoch_count, N_STAGES):
            raise InvariantViolation(
                f"probs must have shape ({self.grid.epoch_count}, {N_STAGES}), "
                f"got {probs.shape}"
            )
        if not np.isfinite(probs).all():
            raise SimplexViolation("probabilities must be finite")
        if (probs < 0).any() or (probs > 1).any():
            raise SimplexViolation("probabilities must lie in [0, 1]")
        row_sums = probs.sum(axis=1)
        bad = np.abs(row_sums - 1.0) > SIMPLEX_ATOL
        if bad.any():
            e = int(np.argmax(bad))
            raise SimplexViolation(
                f"row {e} sums to {row_sums[e]:.9f}, expected 1 within {SIMPLEX_ATOL}"
            )
        object.__setattr__(self, "probs", probs)

    @property
    def epoch_count(self) -> int:
        return self.grid.epoch_count


@dataclass(frozen=True)
class Hypnogram:
    """Per-epoch stage sequence with uncertain flags.

    ``uncertain`` may only be true on scored epochs; an Unscored epoch
    cannot carry an uncertainty flag.
    """

    grid: EpochGrid
    stages: np.ndarray = field(repr=False)
    uncertain: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        _check_grid(self.grid)
        stages = _frozen_array(self.stages, np.int8)
        if stages.shape != (self.grid.epoch_count,):
            raise InvariantViolation(
                f"stages must have shape ({self.grid.epoch_count},), got {stages.shape}"
            )
        if ((stages < 0) | (stages > Stage.UNSCORED)).any():
            raise InvariantViolation("stage codes must be within the Stage enum")
        uncertain = self.uncertain
        if uncertain is None:
            uncertain = np.zeros(self.grid.epoch_count, dtype=bool)
        uncertain = _frozen_array(uncertain, bool)
        if uncertain.shape != stages.shape:
            raise InvariantViolation("uncertain must align with stages")
        if (uncertain & (stages == Stage.UNSCORED)).any():
            raise InvariantViolation("uncertain flag not allowed on Unscored epochs")
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "uncertain", uncertain)

    @property
    def epoch_count(self) -> int:
        return self.grid.epoch_count

    def scored_mask(self) -> np.ndarray:
        return self.stages != Stage.UNSCORED


@dataclass(frozen=True)
class ScorerPanel:
    """Aligned hypnograms from several scorers for one recording."""

    grid: EpochGrid
    scorers: tuple  # of (scorer_id, Hypnogram)

    def __post_init__(self):
        _check_grid(self.grid)
        scorers = tuple((str(sid), h) for sid, h in self.scorers)
        if not scorers:
            raise InvariantViolation("panel needs at least one scorer")
        ids = [sid for sid, _ in scorers]
        if len(set(ids)) != len(ids):
            raise InvariantViolation("scorer_id values must be unique")
        for sid, h in scorers:
            if not isinstance(h, Hypnogram):
                raise InvariantViolation(f"scorer {sid} is not a Hypnogram")
            if h.grid != self.grid:
                raise GridMismatch(f"scorer {sid} grid differs from the panel grid")
        object.__setattr__(self, "scorers", scorers)

    @property
    def epoch_count(self) -> int:
        return self.grid.epoch_count

    def stage_matrix(self) -> np.ndarray:
        """Stages as an (n_scorers, epoch_count) int array."""
        return np.stack([h.stages for _, h in self.scorers])

    def uncertain_matrix(self) -> np.ndarray:
        return np.stack([h.uncertain for _, h in self.scorers])


def argmax_hypnogram(h: Hypnodensity) -> Hypnogram:
    """Most probable stage per epoch, ties resolved by canonical priority.

    ``np.argmax`` returns the first maximal index, which is exactly the
    canonical-order-first rule: Wake beats N1 beats N2 beats N3 beats REM
    on equal probability.
    """
    stages = np.argmax(h.probs, axis=1).astype(np.int8)
    return Hypnogram(h.grid, stages)


def vote_counts(panel: ScorerPanel) -> np.ndarray:
    """Votes per stage as an (epoch_count, 5) int matrix, Unscored skipped."""
    stages = panel.stage_matrix()
    counts = np.zeros((panel.epoch_count, N_STAGES), dtype=np.int64)
    for s in range(N_STAGES):
        counts[:, s] = (stages == s).sum(axis=0)
    return counts


def panel_to_hypnodensity(panel: ScorerPanel) -> Hypnodensity:
    """Vote-fraction hypnodensity: probs[e][s] = votes for s / scored votes.

    Raises EmptyEpoch if some epoch has no scored vote at all.
    """
    counts = vote_counts(panel)
    denom = counts.sum(axis=1)
    if (denom == 0).any():
        e = int(np.argmax(denom == 0))
        raise EmptyEpoch(f"epoch {e} has zero non-Unscored votes")
    return Hypnodensity(panel.grid, counts / denom[:, None])


def ensemble_average(hs) -> Hypnodensity:
    """Element-wise mean of hypnodensities sharing one grid."""
    hs = list(hs)
    if not hs:
        raise GridMismatch("ensemble_average needs at least one hypnodensity")
    grid = hs[0].grid
    for h in hs[1:]:
        if h.grid != grid:
            raise GridMismatch(
                f"grid for {h.grid.recording_id!r} differs from {grid.recording_id!r}"
            )
    mean = np.mean([h.probs for h in hs], axis=0)
    return Hypnodensity(grid, mean)
