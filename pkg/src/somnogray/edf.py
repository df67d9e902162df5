"""Reader and writer for continuous EDF recordings.

The format is a 256-byte ASCII header, one 256-byte ASCII block per
signal, then interleaved data records of 16-bit little-endian integers.
Digital values map linearly to physical units per signal.

Only continuous recordings are supported. "EDF Annotations" channels are
skipped with a warning and discontinuous (EDF+D) files are rejected.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateCalibration,
    MalformedHeader,
    RangeOverflow,
    TruncatedFile,
)

__all__ = [
    "SignalHeader",
    "EdfHeader",
    "ChannelSignal",
    "parse_edf",
    "write_edf",
    "make_header",
    "ANNOTATION_LABEL",
]

ANNOTATION_LABEL = "EDF Annotations"

_INT_RE = re.compile(r"[+-]?[0-9]+")
_FLOAT_RE = re.compile(r"[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?")
_DATE_RE = re.compile(r"[0-9]{2}\.[0-9]{2}\.[0-9]{2}")


@dataclass(frozen=True)
class SignalHeader:
    """Per-signal header block fields."""

    label: str
    transducer: str = ""
    physical_dim: str = "uV"
    physical_min: float = -1000.0
    physical_max: float = 1000.0
    digital_min: int = -32768
    digital_max: int = 32767
    prefiltering: str = ""
    samples_per_record: int = 0

    @property
    def scale(self) -> float:
        return (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)

    @property
    def is_annotation(self) -> bool:
        return self.label == ANNOTATION_LABEL


@dataclass(frozen=True)
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    n_records: int
    record_duration_s: float
    signals: tuple = field(default_factory=tuple)

    @property
    def header_bytes(self) -> int:
        return 256 * (1 + len(self.signals))

    @property
    def record_bytes(self) -> int:
        return 2 * sum(s.samples_per_record for s in self.signals)


@dataclass(frozen=True)
class ChannelSignal:
    """One channel in physical units."""

    label: str
    fs: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-d, got shape {samples.shape}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs


def _ascii_field(data: bytes, offset: int, width: int, what: str) -> str:
    raw = data[offset : offset + width]
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise MalformedHeader(f"{what}: non-ASCII bytes") from None
    return text.strip()


def _int_field(data: bytes, offset: int, width: int, what: str) -> int:
    text = _ascii_field(data, offset, width, what)
    if not _INT_RE.fullmatch(text):
        raise MalformedHeader(f"{what}: expected integer, got {text!r}")
    return int(text)


def _float_field(data: bytes, offset: int, width: int, what: str) -> float:
    text = _ascii_field(data, offset, width, what)
    if not _FLOAT_RE.fullmatch(text):
        raise MalformedHeader(f"{what}: expected number, got {text!r}")
    return float(text)


def parse_edf(data: bytes):
    """Parse EDF bytes into (EdfHeader, list of ChannelSignal).

    Annotation channels are omitted from the returned signals (with a
    warning); their header entries are kept so layout stays explicit.
    """
    if len(data) < 256:
        raise TruncatedFile(f"file is {len(data)} bytes; EDF needs at least 256")

    version = _ascii_field(data, 0, 8, "version")
    patient_id = _ascii_field(data, 8, 80, "patient_id")
    recording_id = _ascii_field(data, 88, 80, "recording_id")
    start_date = _ascii_field(data, 168, 8, "start_date")
    start_time = _ascii_field(data, 176, 8, "start_time")
    declared_header_bytes = _int_field(data, 184, 8, "header_bytes")
    reserved = _ascii_field(data, 192, 44, "reserved")
    n_records = _int_field(data, 236, 8, "n_records")
    record_duration = _float_field(data, 244, 8, "record_duration_s")
    n_signals = _int_field(data, 252, 4, "n_signals")

    if reserved.startswith("EDF+D"):
        raise MalformedHeader("discontinuous EDF+D recordings are not supported")
    if not _DATE_RE.fullmatch(start_date):
        raise MalformedHeader(f"start_date must be dd.mm.yy, got {start_date!r}")
    if not _DATE_RE.fullmatch(start_time):
        raise MalformedHeader(f"start_time must be hh.mm.ss, got {start_time!r}")
    if n_signals < 1:
        raise MalformedHeader(f"n_signals must be >= 1, got {n_signals}")
    if n_records < 1:
        raise MalformedHeader(f"n_records must be >= 1, got {n_records}")
    if record_duration <= 0:
        raise MalformedHeader(f"record_duration_s must be > 0, got {record_duration}")
    header_bytes = 256 * (1 + n_signals)
    if declared_header_bytes != header_bytes:
        raise MalformedHeader(
            f"header_bytes field says {declared_header_bytes}, layout implies {header_bytes}"
        )
    if len(data) < header_bytes:
        raise TruncatedFile(
            f"file is {len(data)} bytes; header alone needs {header_bytes}"
        )

    # signal blocks are stored as per-field arrays, not per-signal structs
    base = 256
    sizes = (16, 80, 8, 8, 8, 8, 8, 80, 8, 32)
    offsets = []
    pos = base
    for size in sizes:
        offsets.append(pos)
        pos += size * n_signals

    signals = []
    for i in range(n_signals):
        label = _ascii_field(data, offsets[0] + 16 * i, 16, f"signal {i} label")
        transducer = _ascii_field(data, offsets[1] + 80 * i, 80, f"signal {i} transducer")
        physical_dim = _ascii_field(data, offsets[2] + 8 * i, 8, f"signal {i} physical_dim")
        physical_min = _float_field(data, offsets[3] + 8 * i, 8, f"signal {i} physical_min")
        physical_max = _float_field(data, offsets[4] + 8 * i, 8, f"signal {i} physical_max")
        digital_min = _int_field(data, offsets[5] + 8 * i, 8, f"signal {i} digital_min")
        digital_max = _int_field(data, offsets[6] + 8 * i, 8, f"signal {i} digital_max")
        prefiltering = _ascii_field(data, offsets[7] + 80 * i, 80, f"signal {i} prefiltering")
        spr = _int_field(data, offsets[8] + 8 * i, 8, f"signal {i} samples_per_record")
        if spr < 1:
            raise MalformedHeader(f"signal {i}: samples_per_record must be >= 1, got {spr}")
        if physical_min == physical_max:
            raise DegenerateCalibration(f"signal {i}: physical_min = physical_max")
        if digital_min == digital_max:
            raise DegenerateCalibration(f"signal {i}: digital_min = digital_max")
        for name, v in (("digital_min", digital_min), ("digital_max", digital_max)):
            if not (-32768 <= v <= 32767):
                raise MalformedHeader(f"signal {i}: {name} {v} outside int16 range")
        signals.append(
            SignalHeader(
                label=label,
                transducer=transducer,
                physical_dim=physical_dim,
                physical_min=physical_min,
                physical_max=physical_max,
                digital_min=digital_min,
                digital_max=digital_max,
                prefiltering=prefiltering,
                samples_per_record=spr,
            )
        )

    header = EdfHeader(
        version=version,
        patient_id=patient_id,
        recording_id=recording_id,
        start_date=start_date,
        start_time=start_time,
        n_records=n_records,
        record_duration_s=record_duration,
        signals=tuple(signals),
    )

    record_values = sum(s.samples_per_record for s in signals)
    needed = header_bytes + 2 * record_values * n_records
    if len(data) < needed:
        raise TruncatedFile(f"file is {len(data)} bytes; data extent needs {needed}")

    raw = np.frombuffer(data, dtype="<i2", offset=header_bytes, count=record_values * n_records)
    raw = raw.reshape(n_records, record_values)

    channels = []
    col = 0
    for sh in signals:
        block = raw[:, col : col + sh.samples_per_record]
        col += sh.samples_per_record
        if sh.is_annotation:
            warnings.warn(f"skipping annotation channel {sh.label!r}")
            continue
        digital = block.reshape(-1).astype(np.float64)
        physical = (digital - sh.digital_min) * sh.scale + sh.physical_min
        channels.append(
            ChannelSignal(
                label=sh.label,
                fs=sh.samples_per_record / record_duration,
                samples=physical,
            )
        )
    return header, channels


def _pack_text(value: str, width: int, what: str) -> bytes:
    if len(value) > width:
        raise MalformedHeader(f"{what}: {value!r} longer than {width} chars")
    if not all(32 <= ord(c) <= 126 for c in value):
        raise MalformedHeader(f"{what}: non-printable-ASCII characters")
    return value.ljust(width).encode("ascii")


def _pack_number(value, width: int, what: str) -> bytes:
    if isinstance(value, (int, np.integer)) or float(value).is_integer():
        text = str(int(value))
    else:
        text = repr(float(value))
        if len(text) > width:
            for digits in range(width - 2, 0, -1):
                text = f"{float(value):.{digits}g}"
                if len(text) <= width and float(text) == float(value):
                    break
            else:
                raise MalformedHeader(
                    f"{what}: {value!r} not representable in {width} ASCII chars"
                )
    return _pack_text(text, width, what)


def write_edf(header: EdfHeader, channels) -> bytes:
    """Serialize header and physical-unit channels to EDF bytes.

    Channels must align with the header's non-annotation signals, in
    order. Physical values mapping outside a signal's digital range
    raise RangeOverflow; values are rounded to the nearest digital step.
    """
    channels = list(channels)
    if not header.signals:
        raise MalformedHeader("cannot write an EDF with zero signals")
    data_signals = [s for s in header.signals if not s.is_annotation]
    if len(channels) != len(data_signals):
        raise MalformedHeader(
            f"header declares {len(data_signals)} data signal(s), got {len(channels)} channel(s)"
        )
    if any(s.is_annotation for s in header.signals):
        raise MalformedHeader("writing annotation channels is not supported")

    out = bytearray()
    out += _pack_text(header.version, 8, "version")
    out += _pack_text(header.patient_id, 80, "patient_id")
    out += _pack_text(header.recording_id, 80, "recording_id")
    out += _pack_text(header.start_date, 8, "start_date")
    out += _pack_text(header.start_time, 8, "start_time")
    out += _pack_number(header.header_bytes, 8, "header_bytes")
    out += _pack_text("", 44, "reserved")
    out += _pack_number(header.n_records, 8, "n_records")
    out += _pack_number(header.record_duration_s, 8, "record_duration_s")
    out += _pack_number(len(header.signals), 4, "n_signals")

    for sh in header.signals:
        out += _pack_text(sh.label, 16, "label")
    for sh in header.signals:
        out += _pack_text(sh.transducer, 80, "transducer")
    for sh in header.signals:
        out += _pack_text(sh.physical_dim, 8, "physical_dim")
    for sh in header.signals:
        out += _pack_number(sh.physical_min, 8, "physical_min")
    for sh in header.signals:
        out += _pack_number(sh.physical_max, 8, "physical_max")
    for sh in header.signals:
        out += _pack_number(sh.digital_min, 8, "digital_min")
    for sh in header.signals:
        out += _pack_number(sh.digital_max, 8, "digital_max")
    for sh in header.signals:
        out += _pack_text(sh.prefiltering, 80, "prefiltering")
    for sh in header.signals:
        out += _pack_number(sh.samples_per_record, 8, "samples_per_record")
    for _ in header.signals:
        out += _pack_text("", 32, "signal reserved")

    digital_blocks = []
    for sh, ch in zip(header.signals, channels):
        expected = header.n_records * sh.samples_per_record
        if ch.samples.size != expected:
            raise MalformedHeader(
                f"signal {sh.label!r}: header implies {expected} samples, got {ch.samples.size}"
            )
        if sh.physical_min == sh.physical_max or sh.digital_min == sh.digital_max:
            raise DegenerateCalibration(f"signal {sh.label!r}: degenerate calibration")
        digital = np.rint((ch.samples - sh.physical_min) / sh.scale) + sh.digital_min
        lo = min(sh.digital_min, sh.digital_max)
        hi = max(sh.digital_min, sh.digital_max)
        if (digital < lo).any() or (digital > hi).any():
            bad = ch.samples[(digital < lo) | (digital > hi)][0]
            raise RangeOverflow(
                f"signal {sh.label!r}: value {bad} maps outside digital range [{lo}, {hi}]"
            )
        digital_blocks.append(
            digital.astype("<i2").reshape(header.n_records, sh.samples_per_record)
        )

    for r in range(header.n_records):
        for block in digital_blocks:
            out += block[r].tobytes()
    return bytes(out)


def make_header(
    labels,
    fs: float,
    n_records: int,
    record_duration_s: float = 1.0,
    physical_min: float = -1000.0,
    physical_max: float = 1000.0,
    start_date: str = "01.01.01",
    start_time: str = "00.00.00",
    patient_id: str = "X X X X",
    recording_id: str = "Startdate 01.01.01 X X X",
) -> EdfHeader:
    """Convenience header for uniform-rate recordings."""
    spr = fs * record_duration_s
    if abs(spr - round(spr)) > 1e-9:
        raise MalformedHeader(
            f"fs {fs} and record duration {record_duration_s} give non-integer samples/record"
        )
    signals = tuple(
        SignalHeader(
            label=label,
            physical_min=physical_min,
            physical_max=physical_max,
            samples_per_record=int(round(spr)),
        )
        for label in labels
    )
    return EdfHeader(
        version="0",
        patient_id=patient_id,
        recording_id=recording_id,
        start_date=start_date,
        start_time=start_time,
        n_records=n_records,
        record_duration_s=record_duration_s,
        signals=signals,
    )
