"""Atomic JSON/CSV writers for run artifacts."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Table:
    header: Sequence[str]
    rows: Iterable[Sequence]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        # JSON has no inf/nan; keep them readable and round-trippable by float()
        if not np.isfinite(v):
            return str(v)
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(payload) -> bytes:
    if isinstance(payload, Table):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(payload.header)
        for row in payload.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue().encode("utf-8")
    body = dict(_plain(payload))
    body.setdefault("schema_version", SCHEMA_VERSION)
    return (json.dumps(body, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_atomic(path: Path, data: bytes) -> Path:
    """Write through a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def emit_reports(results: dict, out_dir) -> list:
    """Write every ``{filename: payload}`` entry; returns the written paths in order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(results):
        try:
            written.append(write_atomic(out_dir / name, render(results[name])))
        except OSError as exc:
            raise OSError(f"failed to write {out_dir / name}: {exc}") from exc
    return written
