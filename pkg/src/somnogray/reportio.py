"""On-disk formats: CSV, report documents, and SVG figures.

CSV schemas (headers are matched byte-for-byte):

* hypnodensity: ``epoch,p_wake,p_n1,p_n2,p_n3,p_rem`` with 0-based
  contiguous epoch indices and full-precision decimal probabilities.
* hypnogram: ``epoch,stage,uncertain`` with stage tokens W,N1,N2,N3,R,U
  and uncertain in {0,1}.
* uncertainty: ``epoch,metric,value`` with metric tokens ul,um,ur,uu,ue.
* gray mask: ``epoch,gray`` with gray in {0,1}.

Report documents are JSON with an embedded schema name and version;
readers reject unknown versions. A panel manifest is a JSON file mapping
scorer ids to hypnogram CSV paths.

All writers are deterministic: the same value produces the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import (
    EpochGrid,
    Hypnodensity,
    Hypnogram,
    ScorerPanel,
    Stage,
    TOKEN_TO_STAGE,
)
from .errors import (
    GridMismatch,
    NonContiguousEpochs,
    SchemaError,
    TooFewPoints,
    UnknownStageToken,
    VersionError,
)
from .evalx import (
    AgreementReport,
    ExclusionCurve,
    GrayAgreementReport,
    SplitGrayReport,
)
from .uncertainty import GraySelection, UncertaintyMetric, UncertaintySeries

__all__ = [
    "SCHEMA_VERSION",
    "read_hypnodensity_csv",
    "write_hypnodensity_csv",
    "read_hypnogram_csv",
    "write_hypnogram_csv",
    "hypnogram_csv_text",
    "read_uncertainty_csv",
    "write_uncertainty_csv",
    "read_gray_csv",
    "write_gray_csv",
    "read_panel_manifest",
    "write_panel",
    "report_to_document",
    "write_report",
    "read_report",
    "emit_curve_svg",
    "emit_hypnodensity_svg",
]

SCHEMA_NAME = "somnogray.report"
SCHEMA_VERSION = 1

HYPNODENSITY_HEADER = "epoch,p_wake,p_n1,p_n2,p_n3,p_rem"
HYPNOGRAM_HEADER = "epoch,stage,uncertain"
UNCERTAINTY_HEADER = "epoch,metric,value"
GRAY_HEADER = "epoch,gray"


def _read_lines(path) -> list[str]:
    text = Path(path).read_text(encoding="ascii")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _check_header(lines: list[str], expected: str, path) -> None:
    if not lines:
        raise SchemaError(f"{path}: empty file")
    if lines[0] != expected:
        raise SchemaError(f"{path}: expected header {expected!r}, got {lines[0]!r}")


def _check_epoch_column(tokens: list[str], path) -> None:
    for i, tok in enumerate(tokens):
        if tok != str(i):
            raise NonContiguousEpochs(
                f"{path}: epoch column must be 0-based and contiguous; "
                f"row {i} has epoch {tok!r}"
            )


def _fmt(x: float) -> str:
    """Shortest decimal literal that round-trips the float exactly."""
    return repr(float(x))


def _grid_for(path, recording_id, n: int) -> EpochGrid:
    rid = recording_id if recording_id is not None else Path(path).stem
    return EpochGrid(epoch_count=n, recording_id=rid)


def write_hypnodensity_csv(path, h: Hypnodensity) -> None:
    lines = [HYPNODENSITY_HEADER]
    for e, row in enumerate(h.probs):
        lines.append(f"{e}," + ",".join(_fmt(p) for p in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_hypnodensity_csv(path, recording_id=None) -> Hypnodensity:
    lines = _read_lines(path)
    _check_header(lines, HYPNODENSITY_HEADER, path)
    rows, epochs = [], []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise SchemaError(f"{path}:{ln}: expected 6 columns, got {len(parts)}")
        epochs.append(parts[0])
        try:
            rows.append([float(p) for p in parts[1:]])
        except ValueError:
            raise SchemaError(f"{path}:{ln}: non-numeric probability") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    _check_epoch_column(epochs, path)
    grid = _grid_for(path, recording_id, len(rows))
    return Hypnodensity(grid, np.array(rows, dtype=np.float64))


def hypnogram_csv_text(h: Hypnogram) -> str:
    lines = [HYPNOGRAM_HEADER]
    for e in range(h.epoch_count):
        token = Stage(int(h.stages[e])).token
        lines.append(f"{e},{token},{1 if h.uncertain[e] else 0}")
    return "\n".join(lines) + "\n"


def write_hypnogram_csv(path, h: Hypnogram) -> None:
    Path(path).write_text(hypnogram_csv_text(h), encoding="ascii")


def read_hypnogram_csv(path, recording_id=None) -> Hypnogram:
    lines = _read_lines(path)
    _check_header(lines, HYPNOGRAM_HEADER, path)
    stages, uncertain, epochs = [], [], []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise SchemaError(f"{path}:{ln}: expected 3 columns, got {len(parts)}")
        epochs.append(parts[0])
        if parts[1] not in TOKEN_TO_STAGE:
            raise UnknownStageToken(f"{path}:{ln}: unknown stage token {parts[1]!r}")
        stages.append(int(TOKEN_TO_STAGE[parts[1]]))
        if parts[2] not in ("0", "1"):
            raise SchemaError(f"{path}:{ln}: uncertain must be 0 or 1, got {parts[2]!r}")
        uncertain.append(parts[2] == "1")
    if not stages:
        raise SchemaError(f"{path}: no data rows")
    _check_epoch_column(epochs, path)
    grid = _grid_for(path, recording_id, len(stages))
    return Hypnogram(grid, np.array(stages, dtype=np.int8), np.array(uncertain, dtype=bool))


def write_uncertainty_csv(path, s: UncertaintySeries) -> None:
    token = s.metric.value
    lines = [UNCERTAINTY_HEADER]
    for e, v in enumerate(s.values):
        lines.append(f"{e},{token},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_uncertainty_csv(path, recording_id=None) -> UncertaintySeries:
    lines = _read_lines(path)
    _check_header(lines, UNCERTAINTY_HEADER, path)
    values, epochs, tokens = [], [], set()
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise SchemaError(f"{path}:{ln}: expected 3 columns, got {len(parts)}")
        epochs.append(parts[0])
        tokens.add(parts[1])
        try:
            values.append(float(parts[2]))
        except ValueError:
            raise SchemaError(f"{path}:{ln}: non-numeric value") from None
    if not values:
        raise SchemaError(f"{path}: no data rows")
    if len(tokens) != 1:
        raise SchemaError(f"{path}: mixed metric tokens {sorted(tokens)}")
    _check_epoch_column(epochs, path)
    (token,) = tokens
    try:
        metric = UncertaintyMetric(token)
    except ValueError:
        raise SchemaError(f"{path}: unknown metric token {token!r}") from None
    grid = _grid_for(path, recording_id, len(values))
    return UncertaintySeries(grid, metric, np.array(values, dtype=np.float64))


def write_gray_csv(path, g: GraySelection) -> None:
    lines = [GRAY_HEADER]
    for e, v in enumerate(g.mask):
        lines.append(f"{e},{1 if v else 0}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_gray_csv(path) -> np.ndarray:
    """Gray mask as a boolean vector (provenance is not stored in CSV)."""
    lines = _read_lines(path)
    _check_header(lines, GRAY_HEADER, path)
    mask, epochs = [], []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise SchemaError(f"{path}:{ln}: expected 2 columns, got {len(parts)}")
        epochs.append(parts[0])
        if parts[1] not in ("0", "1"):
            raise SchemaError(f"{path}:{ln}: gray must be 0 or 1, got {parts[1]!r}")
        mask.append(parts[1] == "1")
    if not mask:
        raise SchemaError(f"{path}: no data rows")
    _check_epoch_column(epochs, path)
    return np.array(mask, dtype=bool)


# panel manifests

def write_panel(directory, panel: ScorerPanel, manifest_name="panel.json") -> Path:
    """Write each scorer's hypnogram CSV plus a manifest listing them."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for sid, h in panel.scorers:
        fname = f"scorer-{sid}.csv"
        write_hypnogram_csv(directory / fname, h)
        entries.append({"id": sid, "path": fname})
    manifest = {
        "schema": "somnogray.panel",
        "schema_version": SCHEMA_VERSION,
        "recording_id": panel.grid.recording_id,
        "scorers": entries,
    }
    path = directory / manifest_name
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii")
    return path


def read_panel_manifest(path) -> ScorerPanel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="ascii"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != "somnogray.panel":
        raise SchemaError(f"{path}: not a panel manifest")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise VersionError(
            f"{path}: panel schema version {doc.get('schema_version')!r} not supported"
        )
    rid = doc.get("recording_id")
    scorers = doc.get("scorers")
    if not isinstance(rid, str) or not isinstance(scorers, list) or not scorers:
        raise SchemaError(f"{path}: manifest needs recording_id and a scorer list")
    members = []
    for entry in scorers:
        if not isinstance(entry, dict) or "id" not in entry or "path" not in entry:
            raise SchemaError(f"{path}: each scorer entry needs id and path")
        h = read_hypnogram_csv(path.parent / entry["path"], recording_id=rid)
        members.append((entry["id"], h))
    grid = members[0][1].grid
    return ScorerPanel(grid, tuple(members))


# report documents

def _class_metrics_doc(c) -> dict:
    return {
        "stage": c.stage.token,
        "precision": c.precision,
        "recall": c.recall,
        "f1": c.f1,
        "support": c.support,
        "zero_denominator": c.zero_denominator,
    }


def _agreement_body(r: AgreementReport) -> dict:
    return {
        "accuracy": r.accuracy,
        "cohen_kappa": r.cohen_kappa,
        "per_class": [_class_metrics_doc(c) for c in r.per_class],
        "macro_precision": r.macro_precision,
        "macro_recall": r.macro_recall,
        "macro_f1": r.macro_f1,
        "weighted_f1": r.weighted_f1,
        "n_epochs": r.n_epochs,
    }


def _split_body(s: SplitGrayReport) -> dict:
    return {
        "matrix": [list(row) for row in s.matrix],
        "capture": s.capture,
        "capture_reason": s.capture_reason,
        "n_epochs": s.n_epochs,
    }


def report_to_document(report) -> dict:
    """Wrap a report object in its versioned document form."""
    if isinstance(report, AgreementReport):
        kind, body = "agreement", _agreement_body(report)
    elif isinstance(report, ExclusionCurve):
        kind = "exclusion_curve"
        body = {
            "metric": report.metric.value,
            "points": [
                {"pct_excluded": pct, "report": _agreement_body(rep)}
                for pct, rep in report.points
            ],
        }
    elif isinstance(report, GrayAgreementReport):
        kind = "gray_agreement"
        body = {
            "threshold": report.threshold,
            "known": _split_body(report.known),
            "unknown": _split_body(report.unknown),
            "scorer_pct_by_recording": list(report.scorer_pct_by_recording),
            "model_pct_by_recording": list(report.model_pct_by_recording),
            "scorer_median_pct": report.scorer_median_pct,
            "model_median_pct": report.model_median_pct,
        }
    elif isinstance(report, list) and all(
        isinstance(p, tuple) and len(p) == 2 for p in report
    ):
        kind = "capture_curve"
        body = {"points": [{"pct": pct, "captured_fraction": c} for pct, c in report]}
    else:
        raise TypeError(f"cannot serialize report of type {type(report).__name__}")
    return {"schema": SCHEMA_NAME, "schema_version": SCHEMA_VERSION, "kind": kind, "body": body}


def write_report(report, path=None) -> str:
    """Serialize a report deterministically; optionally write it to path."""
    doc = report_to_document(report)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="ascii")
    return text


def read_report(source) -> tuple[str, dict]:
    """Parse a report document, returning (kind, body).

    Accepts a path or a JSON string. Rejects unknown schema names and
    versions so stale readers fail loudly rather than misinterpret.
    """
    # document text always starts with "{"; a path never does
    if isinstance(source, Path) or (
        isinstance(source, str) and not source.lstrip().startswith("{")
    ):
        text = Path(source).read_text(encoding="ascii")
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise SchemaError(f"report is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_NAME:
        raise SchemaError("document is not a somnogray report")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise VersionError(
            f"report schema version {doc.get('schema_version')!r} not supported "
            f"(reader supports {SCHEMA_VERSION})"
        )
    if "kind" not in doc or "body" not in doc:
        raise SchemaError("report document missing kind or body")
    return doc["kind"], doc["body"]


# SVG emitters

_PALETTE = ("#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951")
_STAGE_FILLS = ("#f2c14e", "#9ecae1", "#4292c6", "#08519c", "#c94f7c")


def _svg_num(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return s if s not in ("-0",) else "0"


def emit_curve_svg(series, x_label: str, y_label: str, title: str = "") -> str:
    """Line chart with one polyline and one legend entry per series.

    ``series`` is a sequence of (label, points) where points is a
    sequence of (x, y). Output is deterministic for identical input.
    """
    series = [(str(label), [(float(x), float(y)) for x, y in pts]) for label, pts in series]
    if not series:
        raise TooFewPoints("no series to plot")
    for label, pts in series:
        if len(pts) < 2:
            raise TooFewPoints(f"series {label!r} has {len(pts)} point(s); need >= 2")

    width, height = 800.0, 500.0
    left, right, top, bottom = 70.0, 170.0, 40.0, 60.0
    plot_w, plot_h = width - left - right, height - top - bottom
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return left + (x - x0) / (x1 - x0) * plot_w

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(width)}" '
        f'height="{int(height)}" viewBox="0 0 {int(width)} {int(height)}">',
        f'<rect width="{int(width)}" height="{int(height)}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_svg_num(left + plot_w / 2)}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>'
        )
    # axes
    out.append(
        f'<line x1="{_svg_num(left)}" y1="{_svg_num(top + plot_h)}" '
        f'x2="{_svg_num(left + plot_w)}" y2="{_svg_num(top + plot_h)}" stroke="black"/>'
    )
    out.append(
        f'<line x1="{_svg_num(left)}" y1="{_svg_num(top)}" '
        f'x2="{_svg_num(left)}" y2="{_svg_num(top + plot_h)}" stroke="black"/>'
    )
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        out.append(
            f'<text x="{_svg_num(px(fx))}" y="{_svg_num(top + plot_h + 20)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">{fx:.2f}</text>'
        )
        out.append(
            f'<text x="{_svg_num(left - 8)}" y="{_svg_num(py(fy) + 4)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">{fy:.3f}</text>'
        )
    out.append(
        f'<text x="{_svg_num(left + plot_w / 2)}" y="{_svg_num(height - 16)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">{x_label}</text>'
    )
    out.append(
        f'<text x="18" y="{_svg_num(top + plot_h / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {_svg_num(top + plot_h / 2)})">{y_label}</text>'
    )
    for i, (label, pts) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{_svg_num(px(x))},{_svg_num(py(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        ly = top + 16 + 20 * i
        lx = left + plot_w + 16
        out.append(
            f'<line x1="{_svg_num(lx)}" y1="{_svg_num(ly - 4)}" x2="{_svg_num(lx + 24)}" '
            f'y2="{_svg_num(ly - 4)}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{_svg_num(lx + 30)}" y="{_svg_num(ly)}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_hypnodensity_svg(h: Hypnodensity, gray: GraySelection | None = None) -> str:
    """Stacked per-epoch probability bars with optional gray overlays.

    Stacking follows canonical stage order bottom-up; gray epochs get a
    translucent full-height overlay.
    """
    if gray is not None and gray.grid != h.grid:
        raise GridMismatch("gray selection grid differs from the hypnodensity grid")
    n = h.epoch_count
    width, height = 1000.0, 300.0
    left, top = 50.0, 20.0
    plot_w, plot_h = width - left - 20.0, height - top - 50.0
    bar_w = plot_w / n

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(width)}" '
        f'height="{int(height)}" viewBox="0 0 {int(width)} {int(height)}">',
        f'<rect width="{int(width)}" height="{int(height)}" fill="white"/>',
    ]
    for e in range(n):
        x = left + e * bar_w
        y = top + plot_h
        for s in range(5):
            p = float(h.probs[e, s])
            seg = p * plot_h
            y -= seg
            if seg <= 0:
                continue
            out.append(
                f'<rect x="{_svg_num(x)}" y="{_svg_num(y)}" width="{_svg_num(bar_w)}" '
                f'height="{_svg_num(seg)}" fill="{_STAGE_FILLS[s]}"/>'
            )
    if gray is not None:
        for e in range(n):
            if gray.mask[e]:
                x = left + e * bar_w
                out.append(
                    f'<rect x="{_svg_num(x)}" y="{_svg_num(top)}" width="{_svg_num(bar_w)}" '
                    f'height="{_svg_num(plot_h)}" fill="#555555" fill-opacity="0.45"/>'
                )
    labels = ["W", "N1", "N2", "N3", "R"]
    for s in range(5):
        lx = left + 4 + s * 60
        out.append(
            f'<rect x="{_svg_num(lx)}" y="{_svg_num(height - 24)}" width="12" height="12" '
            f'fill="{_STAGE_FILLS[s]}"/>'
        )
        out.append(
            f'<text x="{_svg_num(lx + 16)}" y="{_svg_num(height - 13)}" '
            f'font-family="sans-serif" font-size="12">{labels[s]}</text>'
        )
    out.append(
        f'<text x="{_svg_num(left + plot_w / 2)}" y="{_svg_num(height - 13)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">epoch</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
