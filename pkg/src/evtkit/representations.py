"""Dense event representations: event count maps and voxel grids.

An event count map (ECM) segments a stream into fixed time bins and sums
event polarities (or counts) per pixel within each bin, then rescales to
a grayscale image. A voxel grid spreads each event's polarity over
neighboring temporal bins with bilinear weights.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import HeaderMismatch, InvalidRange, ZeroWindow
from .events import EventStream
from .pgm import write_pgm

MODE_SIGNED = "signed"
MODE_COUNT = "count"
MODE_TWO_CHANNEL = "two_channel"
MODES = (MODE_SIGNED, MODE_COUNT, MODE_TWO_CHANNEL)

NORM_PER_SEQUENCE = "per_sequence"
NORM_PER_BIN = "per_bin"
NORMALIZATIONS = (NORM_PER_SEQUENCE, NORM_PER_BIN)

GRAY_ZERO = 128  # signed-mode gray level for raw == 0

_RAW_MAGIC = b"ECMR"
_RAW_HEADER = struct.Struct("<III")


@dataclass(frozen=True)
class EcmFrame:
    """One temporal bin of an ECM sequence.

    ``raw`` holds the per-pixel signed polarity sum (signed mode), event
    count (count mode), or a (2, h, w) positive/negative count pair
    (two_channel mode). ``gray`` is the [0, 255] rendering.
    """

    width: int
    height: int
    bin_index: int
    t0: int
    t1: int
    raw: np.ndarray
    gray: np.ndarray
    partial: bool = False


@dataclass(frozen=True)
class EcmSequence:
    window: int
    mode: str
    normalization: str
    bins: tuple

    @property
    def n(self) -> int:
        return len(self.bins)


def num_bins(duration: int, window: int) -> int:
    """ceil(duration / window); a remainder gets a shorter, flagged bin."""
    if window <= 0:
        raise ZeroWindow("bin window must be a positive number of microseconds")
    return -(-duration // window)


def build_ecm(
    stream: EventStream,
    window: int,
    mode: str = MODE_SIGNED,
    normalization: str = NORM_PER_SEQUENCE,
) -> EcmSequence:
    """Bin a canonical stream into an ECM sequence.

    Bins are half-open [t_start + i*w, t_start + (i+1)*w); an event landing
    exactly on t_end is kept in the last bin so that no event is dropped.
    """
    if mode not in MODES:
        raise ValueError(f"unknown ECM mode {mode!r}")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    n = num_bins(stream.duration, window)
    if n == 0 and len(stream) > 0:
        n = 1  # zero-duration stream with events still needs one bin
    height, width = stream.height, stream.width

    if len(stream) > 0:
        rel = stream.t.astype(np.int64) - stream.t_start
        bin_idx = np.minimum(rel // window, n - 1)
        flat = (
            bin_idx * (height * width)
            + stream.y.astype(np.int64) * width
            + stream.x.astype(np.int64)
        )
        size = n * height * width
        pol = stream.p.astype(np.int64)
        if mode == MODE_SIGNED:
            raw_all = np.bincount(flat, weights=pol, minlength=size)
            raw_all = raw_all.astype(np.int64).reshape(n, height, width)
        elif mode == MODE_COUNT:
            raw_all = np.bincount(flat, minlength=size)
            raw_all = raw_all.astype(np.int64).reshape(n, height, width)
        else:
            pos = np.bincount(flat[pol > 0], minlength=size).astype(np.int64)
            neg = np.bincount(flat[pol < 0], minlength=size).astype(np.int64)
            raw_all = np.stack(
                [pos.reshape(n, height, width), neg.reshape(n, height, width)],
                axis=1,
            )
    else:
        shape = (n, 2, height, width) if mode == MODE_TWO_CHANNEL else (
            n, height, width
        )
        raw_all = np.zeros(shape, dtype=np.int64)

    raws = [raw_all[i] for i in range(n)]
    grays = normalize_to_gray(raws, mode, normalization)

    frames = []
    for i in range(n):
        t0 = stream.t_start + i * window
        t1 = min(stream.t_start + (i + 1) * window, stream.t_end)
        frames.append(
            EcmFrame(
                width=width, height=height, bin_index=i, t0=t0, t1=t1,
                raw=raws[i], gray=grays[i],
                partial=(stream.t_start + (i + 1) * window > stream.t_end),
            )
        )
    return EcmSequence(
        window=window, mode=mode, normalization=normalization,
        bins=tuple(frames),
    )


def _gray_signed(raw: np.ndarray, scale: float) -> np.ndarray:
    gray = np.floor(GRAY_ZERO + 127.0 * raw / scale + 0.5)
    return np.clip(gray, 0, 255).astype(np.uint8)


def _gray_count(raw: np.ndarray, scale: float) -> np.ndarray:
    gray = np.floor(255.0 * raw / scale + 0.5)
    return np.clip(gray, 0, 255).astype(np.uint8)


def normalize_to_gray(raws, mode: str, normalization: str):
    """Affine-rescale raw maps to [0, 255] grayscale.

    The divisor M = max(1, max |raw|) is taken over the whole sequence
    (per_sequence) or over each bin alone (per_bin); the floor at 1
    keeps all-zero maps well defined.
    """
    if not raws:
        raise ValueError("need at least one raw map")
    display = [
        r.sum(axis=0) if mode == MODE_TWO_CHANNEL else r for r in raws
    ]
    render = _gray_count if mode in (MODE_COUNT, MODE_TWO_CHANNEL) else _gray_signed
    if normalization == NORM_PER_SEQUENCE:
        scale = max(1.0, max(float(np.abs(r).max()) for r in display))
        return [render(r, scale) for r in display]
    return [render(r, max(1.0, float(np.abs(r).max()))) for r in display]


def build_voxel_grid(stream: EventStream, t0: int, t1: int, num_time_bins: int):
    """Polarity-signed voxel grid with bilinear temporal weights.

    Each in-range event at normalized time tau = (t - t0)*(B - 1)/(t1 - t0)
    contributes p*(1 - frac(tau)) to bin floor(tau) and p*frac(tau) to the
    next bin; its absolute temporal weights always sum to 1. B = 1 collapses
    to a one-bin signed ECM.
    """
    if num_time_bins < 1:
        raise InvalidRange("voxel grid needs at least one temporal bin")
    if t0 >= t1:
        raise InvalidRange(f"invalid voxel time range [{t0}, {t1})")
    height, width = stream.height, stream.width
    grid = np.zeros(num_time_bins * height * width, dtype=np.float64)
    t = stream.t.astype(np.float64)
    in_range = (t >= t0) & (t <= t1)
    if in_range.any():
        tau = (t[in_range] - t0) * (num_time_bins - 1) / (t1 - t0)
        left = np.floor(tau).astype(np.int64)
        frac = tau - left
        pol = stream.p[in_range].astype(np.float64)
        pix = (
            stream.y[in_range].astype(np.int64) * width
            + stream.x[in_range].astype(np.int64)
        )
        plane = height * width
        valid = left < num_time_bins
        np.add.at(
            grid, left[valid] * plane + pix[valid], pol[valid] * (1.0 - frac[valid])
        )
        valid = left + 1 < num_time_bins
        np.add.at(
            grid, (left[valid] + 1) * plane + pix[valid], pol[valid] * frac[valid]
        )
    return grid.reshape(num_time_bins, height, width)


def write_ecm_pgms(seq: EcmSequence, directory, prefix: str = "ecm"):
    """Write each bin's gray map as <prefix>_<bin>.pgm; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for frame in seq.bins:
        path = os.path.join(directory, f"{prefix}_{frame.bin_index:06d}.pgm")
        write_pgm(frame.gray, path)
        paths.append(path)
    return paths


def write_ecm_raw(frame: EcmFrame, path) -> None:
    """Dump one bin's raw map as little-endian i32 with an ECMR header."""
    raw = frame.raw
    if raw.ndim != 2:
        raw = raw.sum(axis=0)
    with open(path, "wb") as f:
        f.write(_RAW_MAGIC)
        f.write(_RAW_HEADER.pack(frame.width, frame.height, frame.bin_index))
        f.write(raw.astype("<i4").tobytes())


def read_ecm_raw(path):
    """Read an ECMR raw dump; returns (bin_index, int32 map)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _RAW_MAGIC:
            raise HeaderMismatch(f"bad magic {magic!r}, expected {_RAW_MAGIC!r}")
        width, height, bin_index = _RAW_HEADER.unpack(f.read(_RAW_HEADER.size))
        data = np.frombuffer(f.read(width * height * 4), dtype="<i4")
    return bin_index, data.reshape(height, width).copy()
