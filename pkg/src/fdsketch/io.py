"""File formats: row streams (CSV or binary) and serialized sketches.

Row streams
    CSV: one row per line, exactly d comma-separated finite decimals,
    written with shortest-round-trip repr so CSV and binary carry identical
    bits. Binary: magic ``FDRW``, then d as u64 little-endian, then float64
    little-endian values row-major.

Sketch record
    Magic ``FDSK``, version u16, then k, ell, m, d, rows_seen as u64 LE,
    then eps, delta_sum, input_frob_sq as f64 LE, then the m*d row-major
    float64 buffer. Loading reproduces the stored values bit for bit.
"""
from __future__ import annotations

import struct
from typing import Iterator, Optional

import numpy as np

from .sketch import FdParams, FdSketch, _KahanSum

ROWS_MAGIC = b"FDRW"
SKETCH_MAGIC = b"FDSK"
SKETCH_VERSION = 1
_SKETCH_HEADER = struct.Struct("<4sH5Q3d")
_ROWS_HEADER = struct.Struct("<4sQ")


class RowStreamError(ValueError):
    """Malformed row data; carries the 1-based line (or row) number."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class SketchFormatError(ValueError):
    """Corrupt or unsupported sketch file."""


def sniff_format(path: str) -> str:
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "binary" if head == ROWS_MAGIC else "csv"


def _iter_rows_csv(path: str) -> Iterator[np.ndarray]:
    d: Optional[int] = None
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            tokens = text.split(",")
            if d is None:
                d = len(tokens)
            elif len(tokens) != d:
                raise RowStreamError(
                    path, line_no, f"expected {d} values, found {len(tokens)}"
                )
            try:
                row = np.array([float(t) for t in tokens], dtype=np.float64)
            except ValueError as exc:
                raise RowStreamError(path, line_no, f"bad number: {exc}") from exc
            if not np.isfinite(row).all():
                raise RowStreamError(path, line_no, "non-finite value")
            yield row


def _iter_rows_binary(path: str) -> Iterator[np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.read(_ROWS_HEADER.size)
        if len(header) < _ROWS_HEADER.size:
            raise RowStreamError(path, 0, "truncated header")
        magic, d = _ROWS_HEADER.unpack(header)
        if magic != ROWS_MAGIC:
            raise RowStreamError(path, 0, "bad magic, not a binary row stream")
        if d < 1:
            raise RowStreamError(path, 0, f"bad dimension {d}")
        row_bytes = 8 * d
        row_no = 0
        while True:
            chunk = fh.read(row_bytes)
            if not chunk:
                break
            row_no += 1
            if len(chunk) != row_bytes:
                raise RowStreamError(path, row_no, "truncated row")
            row = np.frombuffer(chunk, dtype="<f8").astype(np.float64)
            if not np.isfinite(row).all():
                raise RowStreamError(path, row_no, "non-finite value")
            yield row


def iter_rows(path: str, fmt: Optional[str] = None) -> Iterator[np.ndarray]:
    """Stream rows from a CSV or binary file; ``fmt=None`` sniffs the magic."""
    fmt = fmt or sniff_format(path)
    if fmt == "csv":
        return _iter_rows_csv(path)
    if fmt == "binary":
        return _iter_rows_binary(path)
    raise ValueError(f"unknown format {fmt!r}")


def read_rows(path: str, fmt: Optional[str] = None) -> np.ndarray:
    """Materialize a whole stream; an empty CSV comes back with shape (0, 0)."""
    rows = list(iter_rows(path, fmt))
    if not rows:
        if (fmt or sniff_format(path)) == "binary":
            with open(path, "rb") as fh:
                _, d = _ROWS_HEADER.unpack(fh.read(_ROWS_HEADER.size))
            return np.zeros((0, int(d)))
        return np.zeros((0, 0))
    return np.vstack(rows)


def write_rows(path: str, rows, fmt: str = "csv") -> None:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("rows must be 2-dimensional")
    if fmt == "csv":
        with open(path, "w", encoding="ascii") as fh:
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_ROWS_HEADER.pack(ROWS_MAGIC, arr.shape[1]))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def save_sketch(path: str, sk: FdSketch) -> None:
    p = sk.params
    # the stored row count carries the lost-mass window width, which a merge
    # can have widened past this sketch's own buffer; pad with zero rows so
    # a reload keeps the same (sound) accounting
    m_out = max(p.buffer_rows, sk.mass_bracket_rows)
    buf = sk._buf
    if m_out > p.buffer_rows:
        buf = np.vstack([buf, np.zeros((m_out - p.buffer_rows, p.d))])
    with open(path, "wb") as fh:
        fh.write(
            _SKETCH_HEADER.pack(
                SKETCH_MAGIC,
                SKETCH_VERSION,
                p.k,
                p.ell,
                m_out,
                p.d,
                sk.rows_seen,
                p.eps,
                sk.delta_sum,
                sk.input_frob_sq,
            )
        )
        fh.write(np.ascontiguousarray(buf, dtype="<f8").tobytes())


def load_sketch(path: str) -> FdSketch:
    with open(path, "rb") as fh:
        header = fh.read(_SKETCH_HEADER.size)
        if len(header) < _SKETCH_HEADER.size:
            raise SketchFormatError(f"{path}: truncated header")
        magic, version, k, ell, m, d, rows_seen, eps, delta, frob = (
            _SKETCH_HEADER.unpack(header)
        )
        if magic != SKETCH_MAGIC:
            raise SketchFormatError(f"{path}: bad magic, not a sketch file")
        if version != SKETCH_VERSION:
            raise SketchFormatError(f"{path}: unsupported version {version}")
        body = fh.read()
    expected = 8 * m * d
    if len(body) != expected:
        raise SketchFormatError(
            f"{path}: buffer holds {len(body)} bytes, expected {expected}"
        )
    if not (1 <= k < ell <= m and d >= 1):
        raise SketchFormatError(f"{path}: inconsistent geometry in header")
    buf = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(m, d)

    sk = FdSketch.__new__(FdSketch)
    sk.params = FdParams(
        k=int(k), eps=float(eps), d=int(d), batch_factor=m / ell,
        ell=int(ell), buffer_rows=int(m),
    )
    sk._buf = buf
    nz = 0
    while nz < m and buf[nz].any():
        nz += 1
    sk._nonzero = nz
    # a batched buffer may have been saved mid-fill; force a flush before the
    # next query so reads only ever see spectrally sorted rows
    sk._pending = nz if m > ell else 0
    sk._rows_seen = int(rows_seen)
    sk._frob_acc = _KahanSum(frob)
    sk._delta_acc = _KahanSum(delta)
    sk._bracket_rows = int(m)
    sk.compress_hook = None
    return sk
