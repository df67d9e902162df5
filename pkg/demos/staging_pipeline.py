"""
From raw signals to a staged night
==================================

The whole pipeline in one sitting: synthesize EEG-like signals with
stage-dependent spectra, write them to EDF, parse the files back,
preprocess (bandpass, resample to 64 Hz, robust-normalize, cut into
30-second epochs), extract spectral features, train the softmax
stager, and score a night the model never saw.
"""

import pathlib
import tempfile

from somnogray import stager
from somnogray.core import argmax_hypnogram
from somnogray.edf import make_header, parse_edf, write_edf
from somnogray.evalx import agreement, confusion
from somnogray.preproc import PreprocConfig, preprocess_channel
from somnogray.stager import TrainConfig
from somnogray.synthgen import SIGNAL_FS, SynthConfig, generate

work = pathlib.Path(tempfile.mkdtemp(prefix="staging-demo-"))
cfg = PreprocConfig()

# ten synthetic nights with raw signals attached. each stage leaves a
# spectral fingerprint: deep sleep is delta-heavy, wake is mixed.
dataset = generate(
    SynthConfig(seed=29, n_recordings=10, epochs_per_recording=120),
    with_signals=True,
)

# round-trip every recording through a real EDF file. 16-bit physical
# quantization and all; nothing downstream sees the in-memory arrays.
edf_paths = {}
for rec in dataset:
    header = make_header(
        [s.label for s in rec.signals],
        fs=SIGNAL_FS,
        n_records=30 * rec.truth.epoch_count,
        physical_min=-2000,
        physical_max=2000,
    )
    path = work / f"{rec.recording_id}.edf"
    path.write_bytes(write_edf(header, rec.signals))
    edf_paths[rec.recording_id] = path
print(f"wrote {len(edf_paths)} EDF files under {work}")

# train on eight nights, hold out two
train_recs, test_recs = dataset[:8], dataset[8:]

features, labels = [], []
for rec in train_recs:
    _, channels = parse_edf(edf_paths[rec.recording_id].read_bytes())
    for ch in channels:
        epoched = preprocess_channel(ch, rec.recording_id, cfg)
        features.append(stager.extract_features(epoched))
        labels.append(rec.truth)

model = stager.train(features, labels, TrainConfig(seed=0))
meta = model.training_meta
print(f"best snapshot at training epoch {meta['best_epoch']}, "
      f"validation accuracy {meta['best_val_accuracy']:.3f}")

# the model rediscovers each stage's spectral fingerprint: among the
# five band-power features (comparable scales), the strongest positive
# weight names the band that argues FOR the stage
bands = stager.FEATURE_NAMES[:5]
for token, row in zip(("W", "N1", "N2", "N3", "R"), model.weights):
    top = max(range(len(bands)), key=lambda j: row[j])
    print(f"  stage {token:>2} is argued for by {bands[top]}")

# stage the held-out nights and compare with their references
cm = None
for rec in test_recs:
    _, channels = parse_edf(edf_paths[rec.recording_id].read_bytes())
    h = stager.stage_recording(channels, model, rec.recording_id, cfg)
    part = confusion(rec.truth, argmax_hypnogram(h))
    cm = part if cm is None else cm + part
    print(f"{rec.recording_id}: staged {h.epoch_count} held-out epochs")

report = agreement(cm)
print(f"\nheld-out accuracy {report.accuracy:.3f}, "
      f"kappa {report.cohen_kappa:.3f} over {report.n_epochs} epochs")
