"""
Reviewing gray epochs as an event-sourced session
=================================================

A review session is a pure fold over an append-only event log: one
``created`` event freezes the gray queue, each ``decision`` overrides
one gray epoch (last write wins), one ``completed`` event closes the
session. Because state is a fold, replaying the log reproduces the
live session exactly; that is what makes reviews auditable and
restart-safe. This script walks one session end to end.
"""

import pathlib
import tempfile

from somnogray.core import Stage, argmax_hypnogram
from somnogray.evalx import agreement, confusion
from somnogray.review import (
    apply_decision,
    complete_session,
    corrected_hypnogram,
    create_session,
    decode_event,
    encode_event,
    export_hypnogram,
    replay,
)
from somnogray.synthgen import SynthConfig, generate
from somnogray.uncertainty import UncertaintyMetric

rec = generate(SynthConfig(seed=13, n_recordings=1, epochs_per_recording=300))[0]
model, truth = rec.model, rec.truth

before = agreement(confusion(truth, argmax_hypnogram(model)))
print(f"model alone agrees with the reference on {before.accuracy:.1%} of epochs")

# open a session over the 5% most uncertain epochs (unlikeability metric).
# create_session returns the frozen state AND the event that produced it.
session, created = create_session(
    session_id="demo-session",
    recording_id=rec.recording_id,
    model=model,
    metric=UncertaintyMetric.UNLIKEABILITY,
    mode="rank_pct",
    parameter=0.05,
    reviewer="demo",
    timestamp=1000.0,
)
events = [created]
print(f"queue holds {len(session.queue)} epochs, most uncertain first:")
for epoch, value in session.queue[:3]:
    print(f"  epoch {epoch:>3}  unlikeability {value:.3f}")

# play the expert: re-score every queued epoch with the reference stage.
# each decision is one event appended to the log.
ts = 1001.0
for epoch, _ in session.queue:
    stage = Stage(int(truth.stages[epoch]))
    session, ev = apply_decision(session, epoch, stage, timestamp=ts)
    events.append(ev)
    ts += 1.0

# second thoughts are allowed while the session is open: deciding the
# same epoch again simply replaces the earlier call
first_epoch = session.queue[0][0]
session, ev = apply_decision(session, first_epoch, Stage.N2, note="on reflection", timestamp=ts)
events.append(ev)
session, ev = apply_decision(
    session, first_epoch, Stage(int(truth.stages[first_epoch])), note="no, the first call stands",
    timestamp=ts + 1.0,
)
events.append(ev)

session, ev = complete_session(session, timestamp=ts + 2.0)
events.append(ev)

after = agreement(confusion(truth, corrected_hypnogram(model, session)))
print(f"\nafter reviewing {len(session.decisions)} epochs: "
      f"{before.accuracy:.1%} -> {after.accuracy:.1%}")

# the export marks any still-undecided gray epoch as uncertain; here the
# reviewer cleared the whole queue, so nothing is flagged
exported = export_hypnogram(model, session)
print(f"export flags {int(exported.uncertain.sum())} epochs as uncertain")

# persistence is just the log, one JSON line per event
log_path = pathlib.Path(tempfile.mkdtemp(prefix="review-demo-")) / "session.log"
log_path.write_text("".join(encode_event(e) + "\n" for e in events), encoding="ascii")
print(f"\nwrote {len(events)} events to {log_path}")

# replaying the log folds the events back into the identical state
replayed = replay(decode_event(line) for line in log_path.read_text(encoding="ascii").splitlines())
assert replayed == session
print("replayed session state is identical to the live one")
