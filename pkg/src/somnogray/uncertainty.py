"""Per-epoch uncertainty metrics and gray-area selection.

Five metrics quantify how undecided a probability row is. For all of
them except the confidence ratio, larger means more uncertain:

* least confidence   U_L = (1 - max p) * n / (n - 1)
* confidence margin  U_M = 1 - (max1 - max2)
* confidence ratio   U_R = max1 / max2   (smaller = more uncertain)
* unlikeability      U_U = 1 - sum(p_i^2)
* normalized entropy U_E = -sum(p_i log2 p_i) / log2 n, with 0 log2 0 = 0

Gray areas are selected either by rank (the most uncertain fraction of
all pooled epochs) or by a fixed threshold on the metric value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import EpochGrid, Hypnodensity, N_STAGES
from .errors import EmptyInput, InvalidGrayParams, InvariantViolation, MetricMismatch

__all__ = [
    "UncertaintyMetric",
    "UncertaintySeries",
    "GraySelection",
    "compute_uncertainty",
    "select_gray_rank",
    "select_gray_threshold",
    "R_CAP",
    "RATIO_EPS",
]

#: Cap applied to the confidence ratio so one-hot rows stay finite.
R_CAP = 1e12

#: Denominator floor for the confidence ratio.
RATIO_EPS = 1e-12


class UncertaintyMetric(enum.Enum):
    """The five uncertainty metrics, with their comparison direction."""

    LEAST_CONFIDENCE = "ul"
    MARGIN_OF_CONFIDENCE = "um"
    RATIO_OF_CONFIDENCE = "ur"
    UNLIKEABILITY = "uu"
    ENTROPY = "ue"

    @property
    def larger_is_more_uncertain(self) -> bool:
        """Direction flag: False only for the confidence ratio."""
        return self is not UncertaintyMetric.RATIO_OF_CONFIDENCE

    @property
    def value_range(self) -> tuple[float, float]:
        if self is UncertaintyMetric.RATIO_OF_CONFIDENCE:
            return (1.0, R_CAP)
        if self is UncertaintyMetric.UNLIKEABILITY:
            return (0.0, 1.0 - 1.0 / N_STAGES)
        return (0.0, 1.0)

    @classmethod
    def from_token(cls, token: str) -> "UncertaintyMetric":
        try:
            return cls(token.lower())
        except ValueError:
            raise InvalidGrayParams(f"unknown uncertainty metric {token!r}") from None


@dataclass(frozen=True)
class UncertaintySeries:
    """Per-epoch uncertainty values for one recording and one metric."""

    grid: EpochGrid
    metric: UncertaintyMetric
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.epoch_count,):
            raise InvariantViolation(
                f"values must have shape ({self.grid.epoch_count},), got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class GraySelection:
    """Boolean gray mask plus the provenance that produced it."""

    grid: EpochGrid
    mask: np.ndarray = field(repr=False)
    metric: UncertaintyMetric | None = None
    mode: str = "threshold"  # "rank_pct" or "threshold"
    parameter: float = 0.0

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.grid.epoch_count,):
            raise InvariantViolation(
                f"mask must have shape ({self.grid.epoch_count},), got {mask.shape}"
            )
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def selected_count(self) -> int:
        return int(self.mask.sum())


def compute_uncertainty(h: Hypnodensity, metric: UncertaintyMetric) -> UncertaintySeries:
    """Evaluate one uncertainty metric over every epoch of a hypnodensity."""
    p = h.probs
    n = N_STAGES
    top2 = -np.partition(-p, 1, axis=1)[:, :2]
    max1, max2 = top2[:, 0], top2[:, 1]
    if metric is UncertaintyMetric.LEAST_CONFIDENCE:
        values = (1.0 - max1) * n / (n - 1)
    elif metric is UncertaintyMetric.MARGIN_OF_CONFIDENCE:
        values = 1.0 - (max1 - max2)
    elif metric is UncertaintyMetric.RATIO_OF_CONFIDENCE:
        values = np.minimum(max1 / np.maximum(max2, RATIO_EPS), R_CAP)
    elif metric is UncertaintyMetric.UNLIKEABILITY:
        values = 1.0 - np.sum(p * p, axis=1)
    elif metric is UncertaintyMetric.ENTROPY:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0.0, p * np.log2(np.maximum(p, 1e-300)), 0.0)
        values = -terms.sum(axis=1) / math.log2(n)
    else:  # pragma: no cover
        raise InvalidGrayParams(f"unhandled metric {metric}")
    return UncertaintySeries(h.grid, metric, values)


def _rank_keys(series: UncertaintySeries):
    """Sort keys putting the most uncertain epoch first.

    Ties break by (recording_id, epoch_index) ascending, so pooled
    selection is a total order and rank masks nest as pct grows.
    """
    sign = -1.0 if series.metric.larger_is_more_uncertain else 1.0
    rid = series.grid.recording_id
    return [(sign * v, rid, e) for e, v in enumerate(series.values)]


def select_gray_rank(series, pct: float, per_recording: bool = False):
    """Mark the most uncertain round(pct * total) epochs across recordings.

    Parameters
    ----------
    series : list of UncertaintySeries
        One series per recording, all with the same metric.
    pct : float
        Fraction of epochs to select, 0 < pct < 1. The count is rounded
        half away from zero.
    per_recording : bool
        When true, apply the rank rule within each recording separately
        instead of pooling the whole dataset.

    Returns
    -------
    list of GraySelection aligned with the input order.
    """
    series = list(series)
    if not series:
        raise EmptyInput("select_gray_rank needs at least one series")
    metric = series[0].metric
    for s in series[1:]:
        if s.metric is not metric:
            raise MetricMismatch(
                f"cannot pool {s.metric.value} with {metric.value} series"
            )
    if not (0.0 < pct < 1.0):
        raise InvalidGrayParams(f"pct must be in (0, 1), got {pct}")

    if per_recording:
        out = []
        for s in series:
            out.extend(select_gray_rank([s], pct))
        return out

    keyed = []
    for pos, s in enumerate(series):
        for key, e in zip(_rank_keys(s), range(s.grid.epoch_count)):
            keyed.append((key, pos, e))
    total = len(keyed)
    k = int(math.floor(pct * total + 0.5))
    keyed.sort(key=lambda t: t[0])
    masks = [np.zeros(s.grid.epoch_count, dtype=bool) for s in series]
    for _, pos, e in keyed[:k]:
        masks[pos][e] = True
    return [
        GraySelection(s.grid, m, metric=metric, mode="rank_pct", parameter=float(pct))
        for s, m in zip(series, masks)
    ]


def select_gray_threshold(s: UncertaintySeries, thr: float) -> GraySelection:
    """Mark epochs strictly more uncertain than a fixed threshold.

    For most metrics that means value > thr; for the confidence ratio,
    value < thr. A value exactly at the threshold is not gray.
    """
    lo, hi = s.metric.value_range
    if not (lo <= thr <= hi):
        raise InvalidGrayParams(
            f"threshold {thr} outside {s.metric.value} range [{lo}, {hi}]"
        )
    if s.metric.larger_is_more_uncertain:
        mask = s.values > thr
    else:
        mask = s.values < thr
    return GraySelection(
        s.grid, mask, metric=s.metric, mode="threshold", parameter=float(thr)
    )
