"""Canonical event stream types and core stream operations.

An event is the 4-tuple (t, x, y, p): timestamp in integer microseconds,
pixel coordinates, and polarity in {+1, -1}. Streams are stored as
structure-of-arrays numpy columns for throughput; the canonical total
order is (t, y, x, p) with -1 sorting before +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRange, NegativeDuration, OutOfBounds

T_DTYPE = np.uint64
X_DTYPE = np.uint16
Y_DTYPE = np.uint16
P_DTYPE = np.int8


def _as_column(values, dtype):
    arr = np.asarray(values)
    if arr.dtype != dtype:
        arr = arr.astype(dtype)
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class EventStream:
    """Immutable event stream with sensor geometry and a time range.

    ``t``, ``x``, ``y``, ``p`` are parallel 1-D arrays. After
    :func:`canonicalize` the stream is strictly ordered by (t, y, x, p)
    and free of exact duplicates; canonical streams are safe to share
    read-only across workers.
    """

    width: int
    height: int
    t_start: int
    t_end: int
    t: np.ndarray = field(default_factory=lambda: np.empty(0, T_DTYPE))
    x: np.ndarray = field(default_factory=lambda: np.empty(0, X_DTYPE))
    y: np.ndarray = field(default_factory=lambda: np.empty(0, Y_DTYPE))
    p: np.ndarray = field(default_factory=lambda: np.empty(0, P_DTYPE))

    def __post_init__(self):
        object.__setattr__(self, "t", _as_column(self.t, T_DTYPE))
        object.__setattr__(self, "x", _as_column(self.x, X_DTYPE))
        object.__setattr__(self, "y", _as_column(self.y, Y_DTYPE))
        object.__setattr__(self, "p", _as_column(self.p, P_DTYPE))
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event columns have mismatched lengths")

    def __len__(self):
        return len(self.t)

    @property
    def duration(self) -> int:
        return self.t_end - self.t_start

    def validate(self) -> None:
        """Check geometry, polarity, and time-range invariants.

        Does not require canonical ordering; use :func:`canonicalize`
        to establish it.
        """
        if self.width <= 0 or self.height <= 0:
            raise OutOfBounds(f"invalid sensor geometry {self.width}x{self.height}")
        if self.t_end < self.t_start:
            raise NegativeDuration(
                f"t_end {self.t_end} < t_start {self.t_start}"
            )
        if len(self) == 0:
            return
        if self.x.max() >= self.width or self.y.max() >= self.height:
            bad = int(np.argmax((self.x >= self.width) | (self.y >= self.height)))
            raise OutOfBounds(
                f"event {bad} at ({int(self.x[bad])}, {int(self.y[bad])}) "
                f"outside {self.width}x{self.height} sensor"
            )
        if not np.all((self.p == 1) | (self.p == -1)):
            raise OutOfBounds("polarity values must be +1 or -1")
        if int(self.t.min()) < self.t_start or int(self.t.max()) > self.t_end:
            raise OutOfBounds(
                f"event timestamps outside [{self.t_start}, {self.t_end}]"
            )

    def is_canonical(self) -> bool:
        """True if events are strictly ordered by (t, y, x, p)."""
        if len(self) < 2:
            return True
        keys = np.stack(
            [
                self.t.astype(np.int64),
                self.y.astype(np.int64),
                self.x.astype(np.int64),
                self.p.astype(np.int64),
            ],
            axis=1,
        )
        diff = np.diff(keys, axis=0)
        # strictly increasing lexicographically: first nonzero diff column > 0
        for row in diff:
            nz = row[row != 0]
            if len(nz) == 0 or nz[0] < 0:
                return False
        return True

    def with_events(self, t, x, y, p, t_start=None, t_end=None) -> "EventStream":
        return EventStream(
            width=self.width,
            height=self.height,
            t_start=self.t_start if t_start is None else t_start,
            t_end=self.t_end if t_end is None else t_end,
            t=t,
            x=x,
            y=y,
            p=p,
        )


def canonicalize(stream: EventStream) -> EventStream:
    """Sort events by (t, y, x, p), drop exact duplicates, and validate.

    Idempotent. Polarity -1 orders before +1 at equal (t, y, x); a real
    sensor cannot emit two identical events, so exact duplicates are
    dropped rather than kept.
    """
    stream.validate()
    if len(stream) == 0:
        return stream
    order = np.lexsort((stream.p, stream.x, stream.y, stream.t))
    t = stream.t[order]
    x = stream.x[order]
    y = stream.y[order]
    p = stream.p[order]
    if len(t) > 1:
        keep = np.empty(len(t), dtype=bool)
        keep[0] = True
        keep[1:] = (
            (np.diff(t.astype(np.int64)) != 0)
            | (x[1:] != x[:-1])
            | (y[1:] != y[:-1])
            | (p[1:] != p[:-1])
        )
        t, x, y, p = t[keep], x[keep], y[keep], p[keep]
    return stream.with_events(t, x, y, p)


def slice_stream(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Half-open slice: exactly the events with t0 <= t < t1.

    ``t1`` may exceed ``t_end`` by one microsecond tick so that
    ``slice_stream(s, s.t_start, s.t_end + 1)`` covers events landing
    exactly on ``t_end``.
    """
    if t0 > t1:
        raise InvalidRange(f"t0 {t0} > t1 {t1}")
    if t0 < stream.t_start or t1 > stream.t_end + 1:
        raise InvalidRange(
            f"[{t0}, {t1}) exceeds stream bounds "
            f"[{stream.t_start}, {stream.t_end}]"
        )
    mask = (stream.t >= T_DTYPE(t0)) & (stream.t < T_DTYPE(t1))
    return stream.with_events(
        stream.t[mask],
        stream.x[mask],
        stream.y[mask],
        stream.p[mask],
        t_start=t0,
        t_end=t1,
    )


def concatenate(a: EventStream, b: EventStream) -> EventStream:
    """Merge two streams over the same sensor; result spans both time ranges."""
    if (a.width, a.height) != (b.width, b.height):
        raise InvalidRange("cannot concatenate streams with different geometry")
    merged = EventStream(
        width=a.width,
        height=a.height,
        t_start=min(a.t_start, b.t_start),
        t_end=max(a.t_end, b.t_end),
        t=np.concatenate([a.t, b.t]),
        x=np.concatenate([a.x, b.x]),
        y=np.concatenate([a.y, b.y]),
        p=np.concatenate([a.p, b.p]),
    )
    return canonicalize(merged)
