"""Small shared helpers: atomic writes and the thread cap."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

__all__ = ["atomic_write_text", "atomic_write_bytes", "thread_count"]


def _atomic_write(path, data, mode: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    """Write text via a temp file + rename so readers never see partials."""
    _atomic_write(path, text, "w")


def atomic_write_bytes(path, data: bytes) -> None:
    _atomic_write(path, data, "wb")


def thread_count() -> int:
    """Worker cap from SOMNOGRAY_THREADS; defaults to the CPU count."""
    value = os.environ.get("SOMNOGRAY_THREADS", "").strip()
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)
