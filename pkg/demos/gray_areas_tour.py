"""
Finding the gray areas of a hypnodensity
========================================

A hypnodensity assigns every 30-second epoch a probability over the
five sleep stages (Wake, N1, N2, N3, REM) instead of a single label.
This script generates one synthetic recording, scores how uncertain
each epoch is under five different metrics, and pulls out the "gray
areas" two ways: by a fixed threshold and by taking the most uncertain
fraction of the night.
"""

import pathlib

import numpy as np

from somnogray.core import Stage, argmax_hypnogram
from somnogray.reportio import emit_hypnodensity_svg
from somnogray.synthgen import SynthConfig, generate
from somnogray.uncertainty import (
    UncertaintyMetric,
    compute_uncertainty,
    select_gray_rank,
    select_gray_threshold,
)

out_dir = pathlib.Path(__file__).parent / "_out"
out_dir.mkdir(exist_ok=True)

# one synthetic night: 900 epochs = 7.5 hours, model error rate 18%
rec = generate(SynthConfig(seed=42, n_recordings=1, epochs_per_recording=900))[0]
model = rec.model
print(f"recording {rec.recording_id}: {model.epoch_count} epochs")

# the single-label view throws the ambiguity away
stages = argmax_hypnogram(model)
for stage in Stage:
    if stage.scoreable:
        share = float((stages.stages == stage).mean())
        print(f"  {stage.token:>2}: {share:5.1%} of the night")

# five ways to score one epoch's ambiguity; all work on the same rows
print("\nmean uncertainty per metric:")
for metric in UncertaintyMetric:
    series = compute_uncertainty(model, metric)
    print(f"  {metric.value}: {float(np.mean(series.values)):8.4f}")

# threshold rule: an epoch is gray when unlikeability exceeds 0.6.
# with ten scorers that line separates 4/3/3 vote splits (gray) from
# 6/4 splits (not gray)
uu = compute_uncertainty(model, UncertaintyMetric.UNLIKEABILITY)
by_threshold = select_gray_threshold(uu, 0.6)
print(f"\nthreshold 0.6: {by_threshold.selected_count} gray epochs "
      f"({by_threshold.selected_count / model.epoch_count:.1%})")

# rank rule: take the most uncertain 10% of the night, whatever the values
(by_rank,) = select_gray_rank([uu], 0.10)
print(f"rank 10%:      {by_rank.selected_count} gray epochs")

# the rank selection is always a subset of any looser rank selection,
# so review budgets can grow without re-selecting from scratch
(wider,) = select_gray_rank([uu], 0.25)
assert not (by_rank.mask & ~wider.mask).any()
print("rank 10% selection is nested inside the rank 25% selection")

# how often is the model wrong inside vs outside its own gray areas?
wrong = stages.stages != rec.truth.stages
inside = float(wrong[by_rank.mask].mean())
outside = float(wrong[~by_rank.mask].mean())
print(f"\nerror rate inside gray areas:  {inside:.1%}")
print(f"error rate outside gray areas: {outside:.1%}")

# paint the night: stacked probability bars with gray epochs overlaid
svg = emit_hypnodensity_svg(model, gray=by_rank)
path = out_dir / "hypnodensity.svg"
path.write_text(svg, encoding="ascii")
print(f"\nwrote {path}")
