"""Majority scoring across a scorer panel.

The consensus stage of an epoch is the modal vote; when several stages
tie for the most votes, the tied stage earliest in the canonical order
(Wake, N1, N2, N3, REM) wins. Tiebreak applies only among the tied modal
stages, so a stage that is not modal can never win on priority alone.

Uncertain flags never influence votes; they only drive the known vs
unknown uncertainty split and the exclusion mask.
"""

from __future__ import annotations

import numpy as np

from .core import Hypnogram, ScorerPanel, vote_counts
from .errors import EmptyEpoch

__all__ = [
    "majority_score",
    "known_uncertainty_split",
    "exclusion_mask",
]


def majority_score(panel: ScorerPanel):
    """Modal stage per epoch with canonical-priority tiebreak.

    Returns
    -------
    (Hypnogram, tie_mask, tie_fraction)
        tie_mask marks epochs where two or more stages tied for the top
        vote count; tie_fraction = tied epochs / epoch_count.
    """
    counts = vote_counts(panel)
    scored = counts.sum(axis=1)
    if (scored == 0).any():
        e = int(np.argmax(scored == 0))
        raise EmptyEpoch(f"epoch {e} has zero non-Unscored votes")
    top = counts.max(axis=1)
    # argmax picks the first stage attaining the top count: priority order
    stages = np.argmax(counts, axis=1).astype(np.int8)
    tie_mask = (counts == top[:, None]).sum(axis=1) > 1
    tie_fraction = float(tie_mask.mean())
    return Hypnogram(panel.grid, stages), tie_mask, tie_fraction


def known_uncertainty_split(panel: ScorerPanel):
    """Split epochs by whether any scorer flagged them uncertain.

    Returns (known_mask, unknown_mask): known means at least one scorer
    marked the epoch uncertain, unknown is the complement.
    """
    known = panel.uncertain_matrix().any(axis=0)
    return known, ~known


def exclusion_mask(panel: ScorerPanel, min_flags: int = 1) -> np.ndarray:
    """Epochs to exclude from agreement analyses.

    The default policy excludes an epoch as soon as one scorer flagged
    it uncertain; min_flags > 1 switches to a k-of-N policy.
    """
    if min_flags < 1:
        raise ValueError(f"min_flags must be >= 1, got {min_flags}")
    flags = panel.uncertain_matrix().sum(axis=0)
    return flags >= min_flags
