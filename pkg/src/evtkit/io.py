"""Event stream file I/O.

Two formats:

* Text (``.evt``): UTF-8, header line ``# EVT width height t_start t_end``,
  then one event per line ``t x y p`` with single spaces and LF endings.
* Binary (``.evb``): magic ``EVT1``, little-endian header
  ``{width: u32, height: u32, t_start: u64, t_end: u64, count: u64}``,
  then ``count`` packed 16-byte records ``{t: u64, x: u16, y: u16, p: i8,
  pad: 3 zero bytes}``.

Writing then reading a canonical stream is the identity; the binary
round trip is bit-exact.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import HeaderMismatch, ParseError
from .events import EventStream

TEXT_MAGIC = "# EVT"
BINARY_MAGIC = b"EVT1"
_HEADER = struct.Struct("<IIQQQ")
RECORD_DTYPE = np.dtype(
    [("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "V3")]
)
assert RECORD_DTYPE.itemsize == 16

FORMAT_TEXT = "text"
FORMAT_BINARY = "binary"


def format_for_path(path) -> str:
    """Infer event format from the file extension (.evt text, .evb binary)."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".evb":
        return FORMAT_BINARY
    return FORMAT_TEXT


def write_events(stream: EventStream, path, fmt: str | None = None) -> None:
    fmt = fmt or format_for_path(path)
    if fmt == FORMAT_TEXT:
        _write_text(stream, path)
    elif fmt == FORMAT_BINARY:
        _write_binary(stream, path)
    else:
        raise ValueError(f"unknown event format {fmt!r}")


def read_events(path, fmt: str | None = None) -> EventStream:
    fmt = fmt or format_for_path(path)
    if fmt == FORMAT_TEXT:
        stream = _read_text(path)
    elif fmt == FORMAT_BINARY:
        stream = _read_binary(path)
    else:
        raise ValueError(f"unknown event format {fmt!r}")
    stream.validate()
    return stream


def _write_text(stream: EventStream, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(
            f"# EVT {stream.width} {stream.height} "
            f"{stream.t_start} {stream.t_end}\n"
        )
        if len(stream):
            cols = np.stack(
                [
                    stream.t.astype(np.int64),
                    stream.x.astype(np.int64),
                    stream.y.astype(np.int64),
                    stream.p.astype(np.int64),
                ],
                axis=1,
            )
            f.write(
                "\n".join(" ".join(str(v) for v in row) for row in cols.tolist())
            )
            f.write("\n")


def _read_text(path) -> EventStream:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 6 or parts[0] != "#" or parts[1] != "EVT":
            raise HeaderMismatch(f"bad text header: {header!r}")
        try:
            width, height, t_start, t_end = (int(v) for v in parts[2:])
        except ValueError as exc:
            raise HeaderMismatch(f"non-integer header field: {header!r}") from exc
        ts, xs, ys, ps = [], [], [], []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(" ")
            if len(fields) != 4:
                raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
            try:
                t, x, y, p = (int(v) for v in fields)
            except ValueError:
                raise ParseError(f"non-integer field in {line!r}", lineno) from None
            if p not in (-1, 1):
                raise ParseError(f"polarity must be -1 or 1, got {p}", lineno)
            if t < 0 or x < 0 or y < 0:
                raise ParseError(f"negative field in {line!r}", lineno)
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)
    return EventStream(
        width=width, height=height, t_start=t_start, t_end=t_end,
        t=np.array(ts, np.uint64), x=np.array(xs, np.uint16),
        y=np.array(ys, np.uint16), p=np.array(ps, np.int8),
    )


def _write_binary(stream: EventStream, path) -> None:
    records = np.zeros(len(stream), dtype=RECORD_DTYPE)
    records["t"] = stream.t
    records["x"] = stream.x
    records["y"] = stream.y
    records["p"] = stream.p
    with open(path, "wb") as f:
        f.write(BINARY_MAGIC)
        f.write(
            _HEADER.pack(
                stream.width, stream.height, stream.t_start, stream.t_end,
                len(stream),
            )
        )
        f.write(records.tobytes())


def _read_binary(path) -> EventStream:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != BINARY_MAGIC:
            raise HeaderMismatch(f"bad magic {magic!r}, expected {BINARY_MAGIC!r}")
        raw = f.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise HeaderMismatch("truncated binary header")
        width, height, t_start, t_end, count = _HEADER.unpack(raw)
        payload = f.read()
    expected = count * RECORD_DTYPE.itemsize
    if len(payload) != expected:
        raise ParseError(
            f"expected {count} records ({expected} bytes), "
            f"got {len(payload)} bytes"
        )
    records = np.frombuffer(payload, dtype=RECORD_DTYPE)
    return EventStream(
        width=width, height=height, t_start=t_start, t_end=t_end,
        t=records["t"].copy(), x=records["x"].copy(),
        y=records["y"].copy(), p=records["p"].copy(),
    )
