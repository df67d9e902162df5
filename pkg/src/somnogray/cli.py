"""Command line interface covering the full pipeline.

Exit codes: 0 success, 2 usage error (argparse), 3 data or schema
error, 4 numeric failure. Diagnostics go to stderr; file outputs are
written atomically. SOMNOGRAY_THREADS caps worker parallelism for the
batch subcommands.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import reportio, stager, synthgen
from ._util import atomic_write_bytes, atomic_write_text, thread_count
from .consensus import majority_score
from .core import EpochGrid, ensemble_average
from .edf import make_header, parse_edf, write_edf
from .errors import InvalidGrayParams, NumericError, SchemaError, SomnograyError
from .evalx import agreement, capture_curve, confusion, exclusion_curve, gray_agreement
from .preproc import EpochedChannel, PreprocConfig, preprocess_channel
from .stager import TrainConfig
from .uncertainty import (
    UncertaintyMetric,
    compute_uncertainty,
    select_gray_rank,
    select_gray_threshold,
)

__all__ = ["main"]

METRIC_TOKENS = ("ul", "um", "ur", "uu", "ue")


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _write_json(path, doc) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_grid(text: str):
    """Grid syntax: 'a:b:n' for n linear steps, or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidGrayParams(f"grid must be start:stop:count, got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise InvalidGrayParams(f"non-numeric grid {text!r}") from None
        if count < 2:
            raise InvalidGrayParams("grid count must be >= 2")
        return [float(x) for x in np.linspace(start, stop, count)]
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError:
        raise InvalidGrayParams(f"non-numeric grid {text!r}") from None


def _load_pairs(data_dir: Path):
    """(hypnodensity, reference) pairs from a synth-layout directory."""
    pairs = []
    for entry in sorted(data_dir.iterdir()):
        model_path = entry / "model.csv"
        truth_path = entry / "truth.csv"
        if entry.is_dir() and model_path.exists() and truth_path.exists():
            h = reportio.read_hypnodensity_csv(model_path, recording_id=entry.name)
            r = reportio.read_hypnogram_csv(truth_path, recording_id=entry.name)
            pairs.append((h, r))
    if not pairs:
        raise SchemaError(f"{data_dir} holds no recording with model.csv and truth.csv")
    return pairs


# subcommand handlers

def _cmd_edf_info(args) -> int:
    header, channels = parse_edf(Path(args.file).read_bytes())
    print(f"version:        {header.version}")
    print(f"patient_id:     {header.patient_id}")
    print(f"recording_id:   {header.recording_id}")
    print(f"start:          {header.start_date} {header.start_time}")
    print(f"records:        {header.n_records} x {header.record_duration_s} s")
    print(f"signals:        {len(header.signals)}")
    for sh in header.signals:
        note = " (annotations, skipped)" if sh.is_annotation else ""
        print(
            f"  {sh.label:16s} {sh.samples_per_record / header.record_duration_s:g} Hz  "
            f"phys [{sh.physical_min}, {sh.physical_max}] {sh.physical_dim}{note}"
        )
    total_s = header.n_records * header.record_duration_s
    print(f"duration:       {total_s:g} s ({total_s / 60:.1f} min)")
    print(f"data channels:  {len(channels)}")
    return 0


def _cmd_preprocess(args) -> int:
    data = Path(args.edf).read_bytes()
    _, channels = parse_edf(data)
    wanted = args.channels.split(",") if args.channels else None
    if wanted is not None:
        channels = [c for c in channels if c.label in set(wanted)]
        if not channels:
            raise SchemaError(f"no channel matches {wanted}")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    recording_id = args.recording_id or Path(args.edf).stem
    cfg = PreprocConfig()
    grid_doc = None
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        epoched = list(
            pool.map(lambda ch: preprocess_channel(ch, recording_id, cfg), channels)
        )
    for ch in epoched:
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in ch.label)
        with (out_dir / f"{safe}.npy").open("wb") as fh:
            np.save(fh, ch.data)
        grid_doc = {
            "recording_id": recording_id,
            "epoch_count": ch.grid.epoch_count,
            "channels": [c.label for c in epoched],
        }
        print(f"{ch.label}: {ch.grid.epoch_count} epochs -> {out_dir / (safe + '.npy')}")
    _write_json(out_dir / "grid.json", grid_doc)
    return 0


def _train_dataset(data_dir: Path, channels=None):
    features, labels = [], []
    cfg = PreprocConfig()
    for entry in sorted(data_dir.iterdir()):
        edf_path = entry / "signals.edf"
        truth_path = entry / "truth.csv"
        if not (entry.is_dir() and edf_path.exists() and truth_path.exists()):
            continue
        _, chans = parse_edf(edf_path.read_bytes())
        if channels is not None:
            chans = [c for c in chans if c.label in channels]
        truth = reportio.read_hypnogram_csv(truth_path, recording_id=entry.name)
        for ch in chans:
            epoched = preprocess_channel(ch, entry.name, cfg)
            if epoched.grid.epoch_count != truth.epoch_count:
                raise SchemaError(
                    f"{entry.name}: {epoched.grid.epoch_count} signal epochs vs "
                    f"{truth.epoch_count} labels"
                )
            features.append(stager.extract_features(epoched))
            labels.append(truth)
    if not features:
        raise SchemaError(f"{data_dir} holds no recording with signals.edf and truth.csv")
    return features, labels


def _cmd_train(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        if not isinstance(overrides, dict):
            raise SchemaError(f"{args.config}: train config must be a JSON object")
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = TrainConfig(**overrides)
    channels = set(args.channels.split(",")) if args.channels else None
    features, labels = _train_dataset(Path(args.data), channels)
    model = stager.train(features, labels, cfg)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    stager.save_model(out, model)
    acc = model.training_meta.get("best_val_accuracy")
    print(f"validation accuracy: {acc if acc is not None else 'n/a'}")
    print(f"model written to {out}")
    return 0


def _cmd_stage(args) -> int:
    if (args.model is None) == (args.hypnodensity is None):
        raise InvalidGrayParams("pass exactly one of --model or --hypnodensity")
    if args.hypnodensity is not None:
        h = reportio.read_hypnodensity_csv(
            args.hypnodensity, recording_id=args.recording_id
        )
    else:
        if args.input is None:
            raise InvalidGrayParams("--model requires an input EDF file or directory")
        model = stager.load_model(args.model)
        source = Path(args.input)
        recording_id = args.recording_id or source.stem
        cfg = PreprocConfig()
        if source.is_dir():
            # preprocess output: per-channel .npy plus grid.json
            grid_doc = json.loads((source / "grid.json").read_text())
            per_channel = []
            grid = EpochGrid(
                epoch_count=int(grid_doc["epoch_count"]),
                recording_id=args.recording_id or grid_doc["recording_id"],
            )
            for npy in sorted(source.glob("*.npy")):
                data = np.load(npy)
                epoched = EpochedChannel(npy.stem, grid, data)
                per_channel.append(stager.apply(model, stager.extract_features(epoched)))
            if not per_channel:
                raise SchemaError(f"{source} holds no .npy channel arrays")
            h = ensemble_average(per_channel)
        else:
            _, channels = parse_edf(source.read_bytes())
            wanted = args.channels.split(",") if args.channels else None
            h = stager.stage_recording(
                channels, model, recording_id, cfg, channels=wanted
            )
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    buf_path = out.parent / (out.name + ".part")
    reportio.write_hypnodensity_csv(buf_path, h)
    buf_path.replace(out)
    print(f"hypnodensity ({h.epoch_count} epochs) written to {out}")
    return 0


def _cmd_uncertainty(args) -> int:
    h = reportio.read_hypnodensity_csv(args.hypnodensity)
    series = compute_uncertainty(h, UncertaintyMetric(args.metric))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    buf_path = out.parent / (out.name + ".part")
    reportio.write_uncertainty_csv(buf_path, series)
    buf_path.replace(out)
    print(f"{args.metric} values for {series.grid.epoch_count} epochs written to {out}")
    return 0


def _cmd_gray(args) -> int:
    series = [reportio.read_uncertainty_csv(p) for p in args.uncertainty]
    if args.mode == "rank":
        selections = select_gray_rank(series, args.value, per_recording=args.per_recording)
    else:
        selections = [select_gray_threshold(s, args.value) for s in series]
    out = Path(args.output)
    if len(selections) == 1:
        out.parent.mkdir(parents=True, exist_ok=True)
        buf = out.parent / (out.name + ".part")
        reportio.write_gray_csv(buf, selections[0])
        buf.replace(out)
        print(f"{selections[0].selected_count} gray epochs -> {out}")
    else:
        out.mkdir(parents=True, exist_ok=True)
        for src, sel in zip(args.uncertainty, selections):
            path = out / (Path(src).stem + ".gray.csv")
            buf = path.parent / (path.name + ".part")
            reportio.write_gray_csv(buf, sel)
            buf.replace(path)
            print(f"{sel.selected_count} gray epochs -> {path}")
    return 0


def _cmd_consensus(args) -> int:
    panel = reportio.read_panel_manifest(args.panel)
    hypnogram, tie_mask, tie_fraction = majority_score(panel)
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        buf = out.parent / (out.name + ".part")
        reportio.write_hypnogram_csv(buf, hypnogram)
        buf.replace(out)
    print(
        json.dumps(
            {
                "recording_id": panel.grid.recording_id,
                "epoch_count": panel.epoch_count,
                "scorers": len(panel.scorers),
                "tied_epochs": int(tie_mask.sum()),
                "tie_fraction": tie_fraction,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_eval(args) -> int:
    ref = reportio.read_hypnogram_csv(args.ref, recording_id="eval")
    pred = reportio.read_hypnogram_csv(args.pred, recording_id="eval")
    exclude = reportio.read_gray_csv(args.exclude) if args.exclude else None
    report = agreement(confusion(ref, pred, exclude=exclude))
    text = reportio.write_report(report, args.output)
    if args.output:
        print(f"report written to {args.output}")
    else:
        sys.stdout.write(text)
    print(f"accuracy: {report.accuracy:.6f}  kappa: {report.cohen_kappa:.6f}")
    return 0


def _cmd_curve(args) -> int:
    pairs = _load_pairs(Path(args.data))
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    grid = _parse_grid(args.grid)
    metrics = (
        list(UncertaintyMetric)
        if args.metric == "all"
        else [UncertaintyMetric(args.metric)]
    )
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one_metric(metric):
        excl = exclusion_curve(hyps, refs, metric, [p for p in grid])
        capt = capture_curve(hyps, refs, metric, [p for p in grid if p > 0])
        return metric, excl, capt

    with ThreadPoolExecutor(max_workers=min(thread_count(), len(metrics))) as pool:
        results = list(pool.map(one_metric, metrics))

    acc_series, capt_series = [], []
    for metric, excl, capt in results:
        token = metric.value
        atomic_write_text(out_dir / f"exclusion_{token}.json", reportio.write_report(excl))
        atomic_write_text(out_dir / f"capture_{token}.json", reportio.write_report(capt))
        acc_series.append(
            (token, [(pct, rep.accuracy) for pct, rep in excl.points])
        )
        capt_series.append((token, capt))
    atomic_write_text(
        out_dir / "exclusion_accuracy.svg",
        reportio.emit_curve_svg(
            acc_series, "fraction of epochs excluded", "accuracy on retained epochs"
        ),
    )
    atomic_write_text(
        out_dir / "capture.svg",
        reportio.emit_curve_svg(
            capt_series, "fraction of epochs marked gray", "fraction of errors captured"
        ),
    )
    for metric, excl, _ in results:
        first = excl.points[0][1].accuracy
        last = excl.points[-1][1].accuracy
        print(f"{metric.value}: accuracy {first:.4f} -> {last:.4f} over the grid")
    print(f"curves written to {out_dir}")
    return 0


def _cmd_agreement(args) -> int:
    if args.data:
        panels, models = [], []
        for entry in sorted(Path(args.data).iterdir()):
            manifest = entry / "panel.json"
            model_path = entry / "model.csv"
            if entry.is_dir() and manifest.exists() and model_path.exists():
                panels.append(reportio.read_panel_manifest(manifest))
                models.append(
                    reportio.read_hypnodensity_csv(model_path, recording_id=entry.name)
                )
        if not panels:
            raise SchemaError(f"{args.data} holds no recording with panel.json and model.csv")
    elif args.panel and args.model:
        panels = [reportio.read_panel_manifest(args.panel)]
        models = [
            reportio.read_hypnodensity_csv(
                args.model, recording_id=panels[0].grid.recording_id
            )
        ]
    else:
        raise InvalidGrayParams("pass --data DIR, or both --panel and --model")
    report = gray_agreement(panels, models, thr=args.threshold)
    text = reportio.write_report(report, args.output)
    if args.output:
        print(f"report written to {args.output}")
    else:
        sys.stdout.write(text)
    known = report.known.capture
    unknown = report.unknown.capture
    print(
        f"median gray %: scorer {report.scorer_median_pct:.2f}, "
        f"model {report.model_median_pct:.2f}; capture known "
        f"{known if known is not None else 'n/a'}, unknown "
        f"{unknown if unknown is not None else 'n/a'}"
    )
    return 0


def _cmd_synth(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        if not isinstance(overrides, dict):
            raise SchemaError(f"{args.config}: synth config must be a JSON object")
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = synthgen.SynthConfig(**overrides)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = synthgen.generate(cfg, with_signals=args.signals)

    def write_recording(rec):
        rec_dir = out_dir / rec.recording_id
        rec_dir.mkdir(parents=True, exist_ok=True)
        reportio.write_hypnodensity_csv(rec_dir / "model.csv", rec.model)
        reportio.write_hypnogram_csv(rec_dir / "truth.csv", rec.truth)
        reportio.write_panel(rec_dir, rec.panel)
        if rec.signals is not None:
            n_epochs = rec.truth.epoch_count
            header = make_header(
                [s.label for s in rec.signals],
                fs=synthgen.SIGNAL_FS,
                n_records=30 * n_epochs,
                record_duration_s=1.0,
                physical_min=-2000,
                physical_max=2000,
                recording_id=f"Startdate 01.01.01 {rec.recording_id}",
            )
            atomic_write_bytes(rec_dir / "signals.edf", write_edf(header, rec.signals))
        return rec.recording_id

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        ids = list(pool.map(write_recording, dataset))
    manifest = {
        "schema": "somnogray.synth",
        "schema_version": reportio.SCHEMA_VERSION,
        "seed": cfg.seed,
        "n_recordings": cfg.n_recordings,
        "epochs_per_recording": cfg.epochs_per_recording,
        "model_error_rate": cfg.model_error_rate,
        "signals": bool(args.signals),
        "recordings": ids,
    }
    _write_json(out_dir / "manifest.json", manifest)
    print(f"{len(ids)} recordings written to {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.data), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somnogray",
        description="Hypnodensity gray-area toolkit: staging, uncertainty, "
        "consensus, evaluation, and review.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edf", help="EDF file utilities")
    edf_sub = p.add_subparsers(dest="edf_command", required=True)
    p_info = edf_sub.add_parser("info", help="print an EDF header summary")
    p_info.add_argument("file", help="path to the EDF file")
    p_info.set_defaults(func=_cmd_edf_info)

    p = sub.add_parser("preprocess", help="bandpass, resample, normalize, epoch an EDF")
    p.add_argument("edf", help="input EDF file")
    p.add_argument("--channels", help="comma-separated channel labels (default: all)")
    p.add_argument("--recording-id", help="recording id (default: file stem)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("train", help="train the softmax stager on a synth-layout directory")
    p.add_argument("--data", required=True, help="directory of recordings with signals.edf and truth.csv")
    p.add_argument("--config", help="JSON file overriding training hyperparameters")
    p.add_argument("--channels", help="comma-separated channel labels (default: all)")
    p.add_argument("--seed", type=int, help="training seed override")
    p.add_argument("-o", "--output", required=True, help="output model file (.npz)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("stage", help="produce an ensemble hypnodensity")
    p.add_argument("input", nargs="?", help="EDF file or preprocess output directory")
    p.add_argument("--model", help="trained model file (.npz)")
    p.add_argument("--hypnodensity", help="pass through an external hypnodensity CSV")
    p.add_argument("--channels", help="comma-separated channel labels (default: all)")
    p.add_argument("--recording-id", help="recording id (default: input stem)")
    p.add_argument("-o", "--output", required=True, help="output hypnodensity CSV")
    p.set_defaults(func=_cmd_stage)

    p = sub.add_parser("uncertainty", help="per-epoch uncertainty values")
    p.add_argument("hypnodensity", help="hypnodensity CSV")
    p.add_argument("--metric", required=True, choices=METRIC_TOKENS, help="uncertainty metric")
    p.add_argument("-o", "--output", required=True, help="output uncertainty CSV")
    p.set_defaults(func=_cmd_uncertainty)

    p = sub.add_parser("gray", help="select gray epochs from uncertainty series")
    p.add_argument("uncertainty", nargs="+", help="uncertainty CSV file(s)")
    p.add_argument("--mode", required=True, choices=("rank", "threshold"), help="selection rule")
    p.add_argument("--value", required=True, type=float, help="rank fraction or threshold")
    p.add_argument("--per-recording", action="store_true",
                   help="apply the rank rule per recording instead of pooled")
    p.add_argument("-o", "--output", required=True,
                   help="output CSV (single input) or directory (multiple)")
    p.set_defaults(func=_cmd_gray)

    p = sub.add_parser("consensus", help="majority hypnogram and tie statistics")
    p.add_argument("--panel", required=True, help="panel manifest JSON")
    p.add_argument("-o", "--output", help="output hypnogram CSV")
    p.set_defaults(func=_cmd_consensus)

    p = sub.add_parser("eval", help="agreement report between two hypnograms")
    p.add_argument("--ref", required=True, help="reference hypnogram CSV")
    p.add_argument("--pred", required=True, help="predicted hypnogram CSV")
    p.add_argument("--exclude", help="gray mask CSV of epochs to exclude")
    p.add_argument("-o", "--output", help="output report JSON")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("curve", help="exclusion and capture curves plus SVG plots")
    p.add_argument("--data", required=True, help="directory of recordings with model.csv and truth.csv")
    p.add_argument("--metric", default="all", choices=METRIC_TOKENS + ("all",),
                   help="uncertainty metric (default: all five)")
    p.add_argument("--grid", default="0,0.01,0.05,0.1,0.2,0.4,0.6,0.8,0.95",
                   help="comma list or start:stop:count of exclusion fractions")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("agreement", help="gray-area agreement between scorers and model")
    p.add_argument("--data", help="directory of recordings with panel.json and model.csv")
    p.add_argument("--panel", help="panel manifest JSON (single recording)")
    p.add_argument("--model", help="model hypnodensity CSV (single recording)")
    p.add_argument("--threshold", type=float, default=0.6, help="unlikeability threshold")
    p.add_argument("-o", "--output", help="output report JSON")
    p.set_defaults(func=_cmd_agreement)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="JSON file overriding generator parameters")
    p.add_argument("--seed", type=int, help="generator seed override")
    p.add_argument("--signals", action="store_true", help="also write signals.edf per recording")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--data", required=True, help="recording data directory")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8337, help="port")
    p.add_argument("--ui", help="directory with a built review UI to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        _fail(str(exc))
        return 4
    except SomnograyError as exc:
        _fail(str(exc))
        return 3
    except FileNotFoundError as exc:
        _fail(f"{exc.filename}: file not found")
        return 3
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _fail(str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
