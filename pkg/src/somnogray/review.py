"""Review sessions: gray-epoch queues, decisions, and event sourcing.

A session is a pure fold over an append-only event log. Three event
types exist: ``created`` (fixes the recording, gray parameters, and the
ordered queue), ``decision`` (last-write-wins stage choice for one gray
epoch), and ``completed``. Replaying a log therefore reproduces the
live state exactly, which makes sessions auditable and restart-safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core import Hypnodensity, Hypnogram, Stage, TOKEN_TO_STAGE, argmax_hypnogram
from .errors import EpochNotGray, InvalidGrayParams, SchemaError, SessionClosed
from .uncertainty import (
    UncertaintyMetric,
    compute_uncertainty,
    select_gray_rank,
    select_gray_threshold,
)

__all__ = [
    "Decision",
    "ReviewSession",
    "build_queue",
    "create_session",
    "apply_decision",
    "complete_session",
    "corrected_hypnogram",
    "export_hypnogram",
    "replay",
    "encode_event",
    "decode_event",
]


@dataclass(frozen=True)
class Decision:
    stage: Stage
    timestamp: float
    note: str = ""


@dataclass(frozen=True)
class ReviewSession:
    """Immutable session state; mutation returns a new state plus an event."""

    session_id: str
    recording_id: str
    reviewer: str
    metric: UncertaintyMetric
    mode: str
    parameter: float
    queue: tuple  # of (epoch_index, uncertainty_value), most uncertain first
    decisions: dict  # epoch_index -> Decision
    status: str = "open"
    created_at: float = 0.0

    @property
    def gray_epochs(self) -> frozenset:
        return frozenset(e for e, _ in self.queue)

    @property
    def open(self) -> bool:
        return self.status == "open"


def build_queue(model: Hypnodensity, metric: UncertaintyMetric, mode: str, parameter: float):
    """Ordered gray queue: most uncertain first, ties by epoch index."""
    series = compute_uncertainty(model, metric)
    if mode == "rank_pct":
        if not (0.0 <= parameter < 1.0):
            raise InvalidGrayParams(f"rank percentage must be in [0, 1), got {parameter}")
        if parameter == 0.0:
            mask = np.zeros(model.epoch_count, dtype=bool)
        else:
            (selection,) = select_gray_rank([series], parameter)
            mask = selection.mask
    elif mode == "threshold":
        mask = select_gray_threshold(series, parameter).mask
    else:
        raise InvalidGrayParams(f"mode must be rank_pct or threshold, got {mode!r}")
    sign = -1.0 if metric.larger_is_more_uncertain else 1.0
    epochs = np.flatnonzero(mask)
    ordered = sorted(epochs, key=lambda e: (sign * series.values[e], e))
    return tuple((int(e), float(series.values[e])) for e in ordered)


def create_session(
    session_id: str,
    recording_id: str,
    model: Hypnodensity,
    metric: UncertaintyMetric,
    mode: str,
    parameter: float,
    reviewer: str = "",
    timestamp: float = 0.0,
):
    """New session plus its creation event."""
    queue = build_queue(model, metric, mode, parameter)
    session = ReviewSession(
        session_id=session_id,
        recording_id=recording_id,
        reviewer=reviewer,
        metric=metric,
        mode=mode,
        parameter=float(parameter),
        queue=queue,
        decisions={},
        status="open",
        created_at=float(timestamp),
    )
    event = {
        "type": "created",
        "session_id": session_id,
        "recording_id": recording_id,
        "reviewer": reviewer,
        "metric": metric.value,
        "mode": mode,
        "parameter": float(parameter),
        "queue": [[e, v] for e, v in queue],
        "ts": float(timestamp),
    }
    return session, event


def apply_decision(
    session: ReviewSession, epoch: int, stage: Stage, note: str = "", timestamp: float = 0.0
):
    """Record one stage decision; returns (new_session, event).

    Only epochs in the gray queue accept decisions, and only while the
    session is open. A second decision for the same epoch replaces the
    first (last write wins).
    """
    if not session.open:
        raise SessionClosed(f"session {session.session_id} is complete")
    epoch = int(epoch)
    if epoch not in session.gray_epochs:
        raise EpochNotGray(f"epoch {epoch} is not in the gray queue")
    stage = Stage(stage)
    if stage is Stage.UNSCORED:
        raise InvalidGrayParams("decisions must pick one of the five scoreable stages")
    decisions = dict(session.decisions)
    decisions[epoch] = Decision(stage, float(timestamp), note)
    event = {
        "type": "decision",
        "epoch": epoch,
        "stage": stage.token,
        "note": note,
        "ts": float(timestamp),
    }
    return replace(session, decisions=decisions), event


def complete_session(session: ReviewSession, timestamp: float = 0.0):
    if not session.open:
        raise SessionClosed(f"session {session.session_id} is already complete")
    event = {"type": "completed", "ts": float(timestamp)}
    return replace(session, status="complete"), event


def corrected_hypnogram(model: Hypnodensity, session: ReviewSession) -> Hypnogram:
    """Model argmax hypnogram with the session's decisions overlaid."""
    base = argmax_hypnogram(model)
    stages = np.array(base.stages)
    for epoch, decision in session.decisions.items():
        stages[epoch] = int(decision.stage)
    return Hypnogram(base.grid, stages)


def export_hypnogram(model: Hypnodensity, session: ReviewSession) -> Hypnogram:
    """Corrected hypnogram with undecided gray epochs flagged uncertain."""
    corrected = corrected_hypnogram(model, session)
    uncertain = np.zeros(corrected.epoch_count, dtype=bool)
    for epoch in session.gray_epochs - set(session.decisions):
        uncertain[epoch] = True
    return Hypnogram(corrected.grid, corrected.stages, uncertain)


def encode_event(event: dict) -> str:
    return json.dumps(event, sort_keys=True)


def decode_event(line: str) -> dict:
    try:
        event = json.loads(line)
    except ValueError as exc:
        raise SchemaError(f"event log line is not JSON: {exc}") from None
    if not isinstance(event, dict) or "type" not in event:
        raise SchemaError("event log line is not an event object")
    return event


def replay(events) -> ReviewSession:
    """Fold an event sequence back into the session state."""
    session = None
    for event in events:
        kind = event.get("type")
        if kind == "created":
            session = ReviewSession(
                session_id=event["session_id"],
                recording_id=event["recording_id"],
                reviewer=event.get("reviewer", ""),
                metric=UncertaintyMetric(event["metric"]),
                mode=event["mode"],
                parameter=float(event["parameter"]),
                queue=tuple((int(e), float(v)) for e, v in event["queue"]),
                decisions={},
                status="open",
                created_at=float(event.get("ts", 0.0)),
            )
        elif kind == "decision":
            if session is None:
                raise SchemaError("decision event before created event")
            decisions = dict(session.decisions)
            decisions[int(event["epoch"])] = Decision(
                TOKEN_TO_STAGE[event["stage"]], float(event.get("ts", 0.0)),
                event.get("note", ""),
            )
            session = replace(session, decisions=decisions)
        elif kind == "completed":
            if session is None:
                raise SchemaError("completed event before created event")
            session = replace(session, status="complete")
        else:
            raise SchemaError(f"unknown event type {kind!r}")
    if session is None:
        raise SchemaError("event log has no created event")
    return session
