"""Agreement metrics and the two gray-area validation experiments.

* :func:`confusion` / :func:`agreement` compute epoch-wise accuracy,
  Cohen's kappa, per-class precision/recall/F1 and their macro and
  support-weighted averages.
* :func:`exclusion_curve` removes the most uncertain epochs at a grid of
  percentages and recomputes agreement on what remains.
* :func:`capture_curve` asks what share of model-vs-reference
  disagreements falls inside the gray set at each percentage.
* :func:`gray_agreement` compares threshold-derived gray areas from a
  scorer panel against those of a model, split by known vs unknown
  uncertainty.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .consensus import known_uncertainty_split
from .core import (
    Hypnodensity,
    Hypnogram,
    N_STAGES,
    ScorerPanel,
    Stage,
    argmax_hypnogram,
    panel_to_hypnodensity,
)
from .errors import AllExcluded, EmptyMatrix, GridMismatch
from .uncertainty import (
    GraySelection,
    UncertaintyMetric,
    compute_uncertainty,
    select_gray_rank,
    select_gray_threshold,
)

__all__ = [
    "ConfusionMatrix",
    "ClassMetrics",
    "AgreementReport",
    "ExclusionCurve",
    "SplitGrayReport",
    "GrayAgreementReport",
    "confusion",
    "agreement",
    "exclusion_curve",
    "capture_curve",
    "gray_agreement",
    "DEFAULT_PCT_GRID",
]

#: Exclusion percentages used when no grid is given; 0 means no exclusion.
DEFAULT_PCT_GRID = (0.0, 0.01, 0.05, 0.10, 0.20, 0.40, 0.60, 0.80, 0.95)


@dataclass(frozen=True)
class ConfusionMatrix:
    """5x5 stage counts; rows = reference stage, columns = predicted."""

    counts: np.ndarray = field(repr=False)
    excluded: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (N_STAGES, N_STAGES):
            raise ValueError(f"counts must be 5x5, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts, self.excluded + other.excluded)


@dataclass(frozen=True)
class ClassMetrics:
    stage: Stage
    precision: float
    recall: float
    f1: float
    support: int
    zero_denominator: bool = False


@dataclass(frozen=True)
class AgreementReport:
    accuracy: float
    cohen_kappa: float
    per_class: tuple  # of ClassMetrics, canonical stage order
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_f1: float
    n_epochs: int


def confusion(reference: Hypnogram, predicted: Hypnogram, exclude=None) -> ConfusionMatrix:
    """Count stage pairs over scored, non-excluded epochs.

    Epochs where either side is Unscored, or where exclude is true, are
    dropped and tallied in the excluded count.
    """
    if reference.grid != predicted.grid:
        raise GridMismatch("reference and predicted grids differ")
    ref = reference.stages
    pred = predicted.stages
    keep = (ref != Stage.UNSCORED) & (pred != Stage.UNSCORED)
    if exclude is not None:
        exclude = np.asarray(exclude, dtype=bool)
        if exclude.shape != ref.shape:
            raise GridMismatch("exclude mask length differs from the grid")
        keep &= ~exclude
    counts = np.zeros((N_STAGES, N_STAGES), dtype=np.int64)
    np.add.at(counts, (ref[keep].astype(np.intp), pred[keep].astype(np.intp)), 1)
    return ConfusionMatrix(counts, excluded=int(ref.size - keep.sum()))


def _kappa(counts: np.ndarray, total: int) -> float:
    p_o = float(np.trace(counts)) / total
    row = counts.sum(axis=1) / total
    col = counts.sum(axis=0) / total
    p_e = float(np.dot(row, col))
    if p_e >= 1.0:
        # degenerate marginals: all mass on one cell pair
        return 1.0 if p_o >= 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def agreement(cm: ConfusionMatrix) -> AgreementReport:
    """Full agreement report from a confusion matrix.

    Per-class metrics with a zero denominator are reported as 0 and
    flagged; classes without reference support are dropped from the
    macro averages. Weighted F1 weights each class by its row support.
    """
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise EmptyMatrix("confusion matrix has zero retained epochs")
    accuracy = float(np.trace(counts)) / total
    kappa = _kappa(counts, total)

    per_class = []
    for s in range(N_STAGES):
        tp = float(counts[s, s])
        col = float(counts[:, s].sum())
        row = float(counts[s, :].sum())
        flagged = col == 0 or row == 0
        precision = tp / col if col > 0 else 0.0
        recall = tp / row if row > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(
            ClassMetrics(Stage(s), precision, recall, f1, int(row), flagged)
        )

    supported = [c for c in per_class if c.support > 0]
    n_sup = len(supported)
    macro_p = sum(c.precision for c in supported) / n_sup
    macro_r = sum(c.recall for c in supported) / n_sup
    macro_f1 = sum(c.f1 for c in supported) / n_sup
    weighted_f1 = sum(c.f1 * c.support for c in supported) / sum(c.support for c in supported)
    return AgreementReport(
        accuracy=accuracy,
        cohen_kappa=kappa,
        per_class=tuple(per_class),
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f1,
        weighted_f1=weighted_f1,
        n_epochs=total,
    )


@dataclass(frozen=True)
class ExclusionCurve:
    metric: UncertaintyMetric
    points: tuple  # of (pct_excluded, AgreementReport)


def _paired(hyps, refs):
    hyps, refs = list(hyps), list(refs)
    if len(hyps) != len(refs) or not hyps:
        raise GridMismatch("need equal, non-empty hypnodensity and reference lists")
    for h, r in zip(hyps, refs):
        if h.grid != r.grid:
            raise GridMismatch(
                f"hypnodensity and reference grids differ for {h.grid.recording_id!r}"
            )
    return hyps, refs


def exclusion_curve(hyps, refs, metric: UncertaintyMetric, pct_grid=DEFAULT_PCT_GRID) -> ExclusionCurve:
    """Agreement on retained epochs as the gray percentage grows.

    For each pct in the grid, the pooled rank rule selects the most
    uncertain epochs across all recordings; those are dropped and
    agreement of the argmax hypnogram against the reference is
    recomputed on the remainder.
    """
    hyps, refs = _paired(hyps, refs)
    series = [compute_uncertainty(h, metric) for h in hyps]
    preds = [argmax_hypnogram(h) for h in hyps]
    points = []
    for pct in pct_grid:
        pct = float(pct)
        if pct == 0.0:
            masks = [None] * len(hyps)
        else:
            masks = [g.mask for g in select_gray_rank(series, pct)]
        cm = None
        for ref, pred, mask in zip(refs, preds, masks):
            part = confusion(ref, pred, exclude=mask)
            cm = part if cm is None else cm + part
        if cm.total == 0:
            raise AllExcluded(f"no epochs retained at pct={pct}")
        points.append((pct, agreement(cm)))
    return ExclusionCurve(metric, tuple(points))


def capture_curve(hyps, refs, metric: UncertaintyMetric, pct_grid=None, predicted=None, exclude=None):
    """Fraction of model-vs-reference disagreements inside the gray set.

    Disagreement compares the model argmax stage against the reference
    stage on scored, non-excluded epochs. Returns a list of
    (pct, captured_fraction) pairs. When there is no disagreement at all
    the curve is defined as all 1.0 and a warning is issued.
    """
    hyps, refs = _paired(hyps, refs)
    if pct_grid is None:
        pct_grid = [p for p in DEFAULT_PCT_GRID if p > 0]
    if predicted is None:
        predicted = [argmax_hypnogram(h) for h in hyps]
    else:
        predicted = list(predicted)
        for h, p in zip(hyps, predicted):
            if p.grid != h.grid:
                raise GridMismatch("predicted grids differ from hypnodensity grids")
    if exclude is None:
        exclude = [None] * len(hyps)

    disagree = []
    for ref, pred, excl in zip(refs, predicted, exclude):
        d = (ref.stages != pred.stages) & ref.scored_mask() & pred.scored_mask()
        if excl is not None:
            d &= ~np.asarray(excl, dtype=bool)
        disagree.append(d)
    n_disagree = int(sum(d.sum() for d in disagree))
    if n_disagree == 0:
        warnings.warn("no disagreements between model and reference; capture curve is 1.0")
        return [(float(p), 1.0) for p in pct_grid]

    series = [compute_uncertainty(h, metric) for h in hyps]
    out = []
    for pct in pct_grid:
        sels = select_gray_rank(series, float(pct))
        captured = sum(int((d & g.mask).sum()) for d, g in zip(disagree, sels))
        out.append((float(pct), captured / n_disagree))
    return out


@dataclass(frozen=True)
class SplitGrayReport:
    """Gray/non-gray cross-tabulation inside one uncertainty split.

    matrix[i][j] counts epochs with scorer-gray status i and model-gray
    status j, 0 = non-gray, 1 = gray. capture is the share of
    scorer-gray epochs that are also model-gray, or None when the split
    holds no scorer-gray epoch.
    """

    matrix: tuple  # 2x2 nested tuples of int
    capture: float | None
    capture_reason: str | None
    n_epochs: int


@dataclass(frozen=True)
class GrayAgreementReport:
    threshold: float
    known: SplitGrayReport
    unknown: SplitGrayReport
    scorer_pct_by_recording: tuple
    model_pct_by_recording: tuple
    scorer_median_pct: float
    model_median_pct: float


def _split_report(s_gray: np.ndarray, m_gray: np.ndarray, mask: np.ndarray) -> SplitGrayReport:
    matrix = [[0, 0], [0, 0]]
    for i in (0, 1):
        for j in (0, 1):
            matrix[i][j] = int(((s_gray == bool(i)) & (m_gray == bool(j)) & mask).sum())
    n_scorer_gray = matrix[1][0] + matrix[1][1]
    if n_scorer_gray == 0:
        capture, reason = None, "no scorer-gray epochs in this split"
    else:
        capture, reason = matrix[1][1] / n_scorer_gray, None
    return SplitGrayReport(
        matrix=tuple(tuple(r) for r in matrix),
        capture=capture,
        capture_reason=reason,
        n_epochs=int(mask.sum()),
    )


def gray_agreement(panels, models, thr: float = 0.6) -> GrayAgreementReport:
    """Compare scorer-derived and model-derived gray areas.

    Both sides become gray masks via the unlikeability metric at the
    given threshold: the scorer side from the panel's vote-fraction
    hypnodensity, the model side from its probability rows. The 2x2
    cross-tabulations are computed separately inside the known split
    (epochs flagged uncertain by at least one scorer) and the unknown
    split. Gray percentages are per recording; medians are taken over
    recordings, not epochs.
    """
    if isinstance(panels, ScorerPanel):
        panels = [panels]
    if isinstance(models, Hypnodensity):
        models = [models]
    panels, models = list(panels), list(models)
    if len(panels) != len(models) or not panels:
        raise GridMismatch("need equal, non-empty panel and model lists")

    s_gray_all, m_gray_all, known_all = [], [], []
    scorer_pct, model_pct = [], []
    for panel, model in zip(panels, models):
        if panel.grid != model.grid:
            raise GridMismatch(
                f"panel and model grids differ for {panel.grid.recording_id!r}"
            )
        s_series = compute_uncertainty(
            panel_to_hypnodensity(panel), UncertaintyMetric.UNLIKEABILITY
        )
        m_series = compute_uncertainty(model, UncertaintyMetric.UNLIKEABILITY)
        s_gray = select_gray_threshold(s_series, thr).mask
        m_gray = select_gray_threshold(m_series, thr).mask
        known, _ = known_uncertainty_split(panel)
        s_gray_all.append(s_gray)
        m_gray_all.append(m_gray)
        known_all.append(known)
        scorer_pct.append(100.0 * float(s_gray.mean()))
        model_pct.append(100.0 * float(m_gray.mean()))

    s_gray = np.concatenate(s_gray_all)
    m_gray = np.concatenate(m_gray_all)
    known = np.concatenate(known_all)
    return GrayAgreementReport(
        threshold=float(thr),
        known=_split_report(s_gray, m_gray, known),
        unknown=_split_report(s_gray, m_gray, ~known),
        scorer_pct_by_recording=tuple(scorer_pct),
        model_pct_by_recording=tuple(model_pct),
        scorer_median_pct=float(np.median(scorer_pct)),
        model_median_pct=float(np.median(model_pct)),
    )
