"""HTTP review service: gray-epoch queues over a recording store.

The data directory holds one subdirectory per recording:

* ``model.csv`` (required): the model hypnodensity.
* ``truth.csv`` (optional): reference hypnogram for live agreement.
* ``signals.edf`` (optional): raw signals; preprocessed lazily for the
  per-epoch signal endpoint.

Sessions persist as JSON-lines event logs under ``_sessions/`` and are
replayed on startup, so the service can restart without losing state.
Mutations of one session serialize behind a per-session lock; reads see
immutable snapshots.
"""

from __future__ import annotations

import threading
import time
import uuid
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from . import review
from .core import Hypnogram, Stage, TOKEN_TO_STAGE, argmax_hypnogram
from .errors import (
    EpochNotGray,
    InvalidGrayParams,
    SessionClosed,
    SomnograyError,
    UnknownRecording,
    UnknownSession,
)
from .evalx import agreement, confusion
from .preproc import PreprocConfig, preprocess_channel
from .reportio import (
    SCHEMA_VERSION,
    read_hypnodensity_csv,
    read_hypnogram_csv,
    report_to_document,
)
from .uncertainty import UncertaintyMetric

__all__ = ["RecordingStore", "create_app"]

SESSIONS_DIR = "_sessions"


class RecordingStore:
    """Lazy, cached access to the recordings in a data directory."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self._hypnodensities = {}
        self._references = {}
        self._epochs = {}
        self._lock = threading.Lock()

    def recording_ids(self):
        out = []
        for entry in sorted(self.data_dir.iterdir()) if self.data_dir.is_dir() else []:
            if entry.is_dir() and (entry / "model.csv").exists():
                out.append(entry.name)
        return out

    def _dir_for(self, recording_id: str) -> Path:
        # ids are plain directory names; no separators, no traversal
        if (
            recording_id.startswith("_")
            or "/" in recording_id
            or "\\" in recording_id
            or recording_id in (".", "..")
        ):
            raise UnknownRecording(f"no recording {recording_id!r} in {self.data_dir}")
        path = self.data_dir / recording_id
        if not (path / "model.csv").exists():
            raise UnknownRecording(f"no recording {recording_id!r} in {self.data_dir}")
        return path

    def hypnodensity(self, recording_id: str):
        with self._lock:
            if recording_id not in self._hypnodensities:
                path = self._dir_for(recording_id) / "model.csv"
                self._hypnodensities[recording_id] = read_hypnodensity_csv(
                    path, recording_id=recording_id
                )
            return self._hypnodensities[recording_id]

    def reference(self, recording_id: str):
        with self._lock:
            if recording_id not in self._references:
                path = self._dir_for(recording_id) / "truth.csv"
                self._references[recording_id] = (
                    read_hypnogram_csv(path, recording_id=recording_id)
                    if path.exists()
                    else None
                )
            return self._references[recording_id]

    def epoch_signals(self, recording_id: str):
        """Preprocessed per-epoch samples per channel, or None."""
        with self._lock:
            if recording_id not in self._epochs:
                path = self._dir_for(recording_id) / "signals.edf"
                if not path.exists():
                    self._epochs[recording_id] = None
                else:
                    from .edf import parse_edf

                    _, channels = parse_edf(path.read_bytes())
                    cfg = PreprocConfig()
                    self._epochs[recording_id] = [
                        preprocess_channel(ch, recording_id, cfg) for ch in channels
                    ]
            return self._epochs[recording_id]


def _agreement_doc(reference: Hypnogram, corrected: Hypnogram):
    report = agreement(confusion(reference, corrected))
    return report_to_document(report)["body"], report.n_epochs


def create_app(data_dir, ui_dir=None) -> FastAPI:
    store = RecordingStore(data_dir)
    sessions_dir = Path(data_dir) / SESSIONS_DIR
    sessions_dir.mkdir(parents=True, exist_ok=True)

    sessions: dict[str, review.ReviewSession] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    for log_path in sorted(sessions_dir.glob("*.log")):
        lines = log_path.read_text(encoding="ascii").splitlines()
        if not lines:
            continue
        state = review.replay(review.decode_event(line) for line in lines)
        sessions[state.session_id] = state
        locks[state.session_id] = threading.Lock()

    app = FastAPI(title="somnogray review service")

    def _append_event(session_id: str, event: dict) -> None:
        path = sessions_dir / f"{session_id}.log"
        with path.open("a", encoding="ascii") as fh:
            fh.write(review.encode_event(event) + "\n")

    def _get_session(session_id: str) -> review.ReviewSession:
        try:
            return sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id!r}") from None

    def _session_lock(session_id: str) -> threading.Lock:
        with registry_lock:
            return locks.setdefault(session_id, threading.Lock())

    def _metrics_payload(session: review.ReviewSession) -> dict:
        model = store.hypnodensity(session.recording_id)
        reference = store.reference(session.recording_id)
        corrected = review.corrected_hypnogram(model, session)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.session_id,
            "decisions": len(session.decisions),
            "queue_length": len(session.queue),
            "status": session.status,
            "baseline": None,
            "current": None,
            "epochs_retained": None,
        }
        if reference is not None:
            baseline_doc, retained = _agreement_doc(reference, argmax_hypnogram(model))
            current_doc, _ = _agreement_doc(reference, corrected)
            payload["baseline"] = baseline_doc
            payload["current"] = current_doc
            payload["epochs_retained"] = retained
        return payload

    def _session_payload(session: review.ReviewSession) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.session_id,
            "recording_id": session.recording_id,
            "reviewer": session.reviewer,
            "metric": session.metric.value,
            "mode": session.mode,
            "parameter": session.parameter,
            "status": session.status,
            "queue": [{"epoch": e, "value": v} for e, v in session.queue],
            "decisions": {
                str(e): {"stage": d.stage.token, "ts": d.timestamp, "note": d.note}
                for e, d in sorted(session.decisions.items())
            },
        }

    @app.exception_handler(SomnograyError)
    async def _domain_error(request, exc: SomnograyError):
        status = 500
        if isinstance(exc, (UnknownRecording, UnknownSession)):
            status = 404
        elif isinstance(exc, InvalidGrayParams):
            status = 400
        elif isinstance(exc, (EpochNotGray, SessionClosed)):
            status = 409
        elif isinstance(exc, SomnograyError):
            status = 422
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/recordings")
    def list_recordings():
        out = []
        for rid in store.recording_ids():
            h = store.hypnodensity(rid)
            out.append(
                {
                    "recording_id": rid,
                    "epoch_count": h.epoch_count,
                    "has_reference": store.reference(rid) is not None,
                    "has_signals": (store.data_dir / rid / "signals.edf").exists(),
                }
            )
        return {"schema_version": SCHEMA_VERSION, "recordings": out}

    @app.get("/recordings/{recording_id}/hypnodensity")
    def get_hypnodensity(recording_id: str):
        h = store.hypnodensity(recording_id)
        stages = argmax_hypnogram(h)
        return {
            "schema_version": SCHEMA_VERSION,
            "recording_id": recording_id,
            "epoch_count": h.epoch_count,
            "stage_order": [Stage(s).token for s in range(5)],
            "probs": [[float(p) for p in row] for row in h.probs],
            "argmax": [Stage(int(s)).token for s in stages.stages],
        }

    @app.get("/recordings/{recording_id}/epochs/{epoch}/signal")
    def get_epoch_signal(recording_id: str, epoch: int):
        epochs = store.epoch_signals(recording_id)
        if epochs is None:
            raise UnknownRecording(f"recording {recording_id!r} has no signals.edf")
        n = epochs[0].grid.epoch_count
        if not (0 <= epoch < n):
            raise InvalidGrayParams(f"epoch {epoch} outside [0, {n})")
        return {
            "schema_version": SCHEMA_VERSION,
            "recording_id": recording_id,
            "epoch": epoch,
            "epoch_count": n,
            "fs": PreprocConfig().target_fs,
            "channels": [
                {"label": ch.label, "samples": [float(x) for x in ch.data[epoch]]}
                for ch in epochs
            ],
        }

    @app.post("/sessions")
    def post_session(body: dict):
        recording_id = body.get("recording_id")
        if not isinstance(recording_id, str):
            raise InvalidGrayParams("recording_id is required")
        metric = UncertaintyMetric.from_token(str(body.get("metric", "uu")))
        mode = str(body.get("mode", "rank_pct"))
        if "parameter" not in body:
            raise InvalidGrayParams("parameter is required")
        try:
            parameter = float(body["parameter"])
        except (TypeError, ValueError):
            raise InvalidGrayParams("parameter must be a number") from None
        reviewer = str(body.get("reviewer", ""))
        model = store.hypnodensity(recording_id)
        session_id = uuid.uuid4().hex[:12]
        state, event = review.create_session(
            session_id,
            recording_id,
            model,
            metric,
            mode,
            parameter,
            reviewer=reviewer,
            timestamp=time.time(),
        )
        with registry_lock:
            sessions[session_id] = state
            locks[session_id] = threading.Lock()
        _append_event(session_id, event)
        return _session_payload(state)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_payload(_get_session(session_id))

    @app.get("/sessions/{session_id}/queue")
    def get_queue(session_id: str):
        session = _get_session(session_id)
        decided = set(session.decisions)
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session_id,
            "queue": [
                {"epoch": e, "value": v, "decided": e in decided}
                for e, v in session.queue
            ],
        }

    @app.post("/sessions/{session_id}/decisions")
    def post_decision(session_id: str, body: dict):
        if "epoch" not in body or "stage" not in body:
            raise InvalidGrayParams("decision needs epoch and stage")
        try:
            epoch = int(body["epoch"])
        except (TypeError, ValueError):
            raise InvalidGrayParams("epoch must be an integer") from None
        token = str(body["stage"])
        if token not in TOKEN_TO_STAGE or token == "U":
            raise InvalidGrayParams(f"stage must be one of W,N1,N2,N3,R, got {token!r}")
        note = str(body.get("note", ""))
        with _session_lock(session_id):
            session = _get_session(session_id)
            model = store.hypnodensity(session.recording_id)
            reference = store.reference(session.recording_id)
            before = None
            if reference is not None:
                before, _ = _agreement_doc(
                    reference, review.corrected_hypnogram(model, session)
                )
            state, event = review.apply_decision(
                session, epoch, TOKEN_TO_STAGE[token], note=note, timestamp=time.time()
            )
            sessions[session_id] = state
            _append_event(session_id, event)
        payload = _metrics_payload(state)
        payload["before"] = before
        payload["after"] = payload["current"]
        return payload

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        return _metrics_payload(_get_session(session_id))

    @app.post("/sessions/{session_id}/complete")
    def post_complete(session_id: str):
        with _session_lock(session_id):
            session = _get_session(session_id)
            state, event = review.complete_session(session, timestamp=time.time())
            sessions[session_id] = state
            _append_event(session_id, event)
        return _session_payload(state)

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str):
        session = _get_session(session_id)
        model = store.hypnodensity(session.recording_id)
        exported = review.export_hypnogram(model, session)
        from .reportio import hypnogram_csv_text

        log_path = sessions_dir / f"{session_id}.log"
        events = [
            review.decode_event(line)
            for line in log_path.read_text(encoding="ascii").splitlines()
        ]
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session_id,
            "recording_id": session.recording_id,
            "hypnogram_csv": hypnogram_csv_text(exported),
            "events": events,
        }

    if ui_dir is not None:
        # fallback mount: API routes above win, everything else is static
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
