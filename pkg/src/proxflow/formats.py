"""On-disk formats: flat binary matrices and versioned trace CSVs.

Binary layout: a 16-byte header (8-byte magic ``PROXFLW1``, then rows and
cols as little-endian uint32) followed by ``rows * cols`` little-endian
float64 values in row-major order. Vectors are stored as ``n x 1``.

Trace CSVs open with one comment line ``# proxflow-trace v<N> <json>``
carrying the run metadata, then a header row and one row per iteration.
Cells that do not apply to a solver are left empty.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .trace import COLUMNS, Trace, TraceRow

__all__ = [
    "MAGIC",
    "TRACE_SCHEMA_VERSION",
    "KNOWN_TRACE_VERSIONS",
    "FormatError",
    "write_matrix",
    "read_matrix",
    "write_matrix_csv",
    "write_trace_csv",
    "read_trace_csv",
]

MAGIC = b"PROXFLW1"
_HEADER = np.dtype([("magic", "S8"), ("rows", "<u4"), ("cols", "<u4")])

TRACE_SCHEMA_VERSION = 1
KNOWN_TRACE_VERSIONS = (1,)
_TRACE_TAG = "# proxflow-trace"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _as_matrix(arr):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"only vectors and matrices can be stored, got ndim={arr.ndim}")
    return arr


def write_matrix(path, arr):
    m = _as_matrix(arr)
    header = np.array([(MAGIC, m.shape[0], m.shape[1])], dtype=_HEADER)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_matrix(path):
    """Load a matrix written by :func:`write_matrix` as a 2-d float array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.itemsize:
        raise FormatError(f"{path}: file shorter than the 16-byte header")
    head = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    if head["magic"] != MAGIC:
        raise FormatError(f"{path}: bad magic {bytes(head['magic'])!r}")
    rows, cols = int(head["rows"]), int(head["cols"])
    body = raw[_HEADER.itemsize:]
    if len(body) != 8 * rows * cols:
        raise FormatError(f"{path}: expected {rows}x{cols} doubles, found {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)


def write_matrix_csv(path, arr):
    np.savetxt(path, _as_matrix(arr), delimiter=",", fmt="%.17g")


# -- traces -------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    return repr(float(v))


def write_trace_csv(path, trace: Trace, extra_meta: dict | None = None):
    meta = {k: v for k, v in trace.meta.items() if _jsonable(v)}
    meta.update(extra_meta or {})
    buf = io.StringIO()
    buf.write(f"{_TRACE_TAG} v{TRACE_SCHEMA_VERSION} {json.dumps(meta, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in trace.rows:
        w.writerow([str(int(row.iter))] + [_cell(v) for v in row[1:]])
    Path(path).write_text(buf.getvalue())


def _jsonable(v):
    try:
        json.dumps(v)
    except (TypeError, ValueError):
        return False
    return True


def read_trace_csv(path) -> Trace:
    """Parse a trace CSV; raises :class:`FormatError` on unknown schema."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_TRACE_TAG):
        raise FormatError(f"{path}: missing '{_TRACE_TAG}' header line")
    rest = lines[0][len(_TRACE_TAG):].strip()
    version, _, meta_json = rest.partition(" ")
    if not version.startswith("v") or not version[1:].isdigit():
        raise FormatError(f"{path}: malformed schema version {version!r}")
    if int(version[1:]) not in KNOWN_TRACE_VERSIONS:
        raise FormatError(f"{path}: unsupported trace schema {version}")
    try:
        meta = json.loads(meta_json) if meta_json else {}
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad metadata ({exc})") from None
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header is None or tuple(header) != COLUMNS:
        raise FormatError(f"{path}: columns {header} differ from {list(COLUMNS)}")
    trace = Trace(meta=meta)
    for k, rec in enumerate(reader, start=3):
        if len(rec) != len(COLUMNS):
            raise FormatError(f"{path}:{k}: expected {len(COLUMNS)} cells, got {len(rec)}")
        try:
            vals = [None if c == "" else float(c) for c in rec[1:]]
            trace.append(TraceRow(int(rec[0]), *vals))
        except ValueError as exc:
            raise FormatError(f"{path}:{k}: {exc}") from None
    return trace
