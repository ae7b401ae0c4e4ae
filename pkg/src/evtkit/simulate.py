"""Video-to-event simulation with a per-pixel contrast-threshold model.

Each pixel integrates log-intensity changes against a reference level;
every crossing of the contrast threshold emits one event, timestamped by
linear interpolation between frame instants. The deterministic core
model only: no noise processes, no sub-frame optical-flow upsampling.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFps, GeometryMismatch
from .events import EventStream, canonicalize
from .pgm import read_pnm, to_grayscale

DEFAULT_THRESHOLD = 0.2
DEFAULT_LINLOG_KNEE = 20.0


@dataclass(frozen=True)
class SimulatorConfig:
    """Free parameters of the contrast-threshold pixel model."""

    theta_pos: float = DEFAULT_THRESHOLD
    theta_neg: float = DEFAULT_THRESHOLD
    linlog_knee: float = DEFAULT_LINLOG_KNEE
    max_events_per_pixel_per_interval: int | None = None

    def validate(self) -> None:
        if self.theta_pos <= 0 or self.theta_neg <= 0:
            raise ValueError("contrast thresholds must be positive")
        if not (0 < self.linlog_knee < 256):
            raise ValueError("linlog knee must lie in (0, 256)")
        cap = self.max_events_per_pixel_per_interval
        if cap is not None and cap < 0:
            raise ValueError("event cap must be non-negative")


@dataclass(frozen=True)
class FrameSequence:
    """Ordered grayscale frames sharing one geometry, at a fixed rate."""

    fps: float
    frames: tuple

    def __post_init__(self):
        if self.fps <= 0:
            raise DegenerateFps(f"fps must be positive, got {self.fps}")
        if len(self.frames) < 1:
            raise GeometryMismatch("frame sequence is empty")
        shape = self.frames[0].shape
        for i, frame in enumerate(self.frames):
            if frame.ndim != 2 or frame.shape != shape:
                raise GeometryMismatch(
                    f"frame {i} has shape {frame.shape}, expected {shape}"
                )

    @property
    def height(self) -> int:
        return self.frames[0].shape[0]

    @property
    def width(self) -> int:
        return self.frames[0].shape[1]


def linlog(intensity, knee: float = DEFAULT_LINLOG_KNEE):
    """Lin-log intensity map: linear with slope ln(knee)/knee below the
    knee, natural log above. Continuous at the knee and monotone on
    [0, 255]."""
    i = np.asarray(intensity, dtype=np.float64)
    slope = math.log(knee) / knee
    out = np.where(i < knee, i * slope, np.log(np.maximum(i, knee)))
    if np.ndim(intensity) == 0:
        return float(out)
    return out


def linlog_inverse(value, knee: float = DEFAULT_LINLOG_KNEE):
    """Inverse of :func:`linlog` on [0, ln(255)]."""
    v = np.asarray(value, dtype=np.float64)
    log_knee = math.log(knee)
    out = np.where(v < log_knee, v * knee / log_knee, np.exp(v))
    if np.ndim(value) == 0:
        return float(out)
    return out


def frame_time_us(frame_index: int, fps: float) -> int:
    """Timestamp of a frame in integer microseconds (round half-up)."""
    return int(math.floor(frame_index * 1e6 / fps + 0.5))


def simulate(frames: FrameSequence, cfg: SimulatorConfig | None = None) -> EventStream:
    """Run the contrast-threshold model over a frame sequence.

    The per-pixel reference log-intensity starts at frame 0 and advances
    by whole threshold multiples only, so sub-threshold residual charge
    carries across frames. Output is a canonical stream covering
    [0, (num_frames - 1) / fps] in microseconds.
    """
    cfg = cfg or SimulatorConfig()
    cfg.validate()
    if len(frames.frames) < 2:
        raise GeometryMismatch("need at least 2 frames to simulate events")

    height, width = frames.height, frames.width
    l_prev = linlog(frames.frames[0], cfg.linlog_knee).ravel()
    l_ref = l_prev.copy()
    flat_x = np.tile(np.arange(width, dtype=np.int64), height)
    flat_y = np.repeat(np.arange(height, dtype=np.int64), width)

    ts_parts, xs_parts, ys_parts, ps_parts = [], [], [], []
    t_prev = 0
    for i in range(1, len(frames.frames)):
        t_now = frame_time_us(i, frames.fps)
        l_new = linlog(frames.frames[i], cfg.linlog_knee).ravel()
        dl = l_new - l_ref
        sign = np.sign(dl)
        theta = np.where(dl > 0, cfg.theta_pos, cfg.theta_neg)
        # tiny relative slack so exact threshold multiples are not lost
        # to float rounding
        k = np.floor(np.abs(dl) / theta + 1e-9).astype(np.int64)
        cap = cfg.max_events_per_pixel_per_interval
        if cap is not None:
            k = np.minimum(k, cap)
        active = np.nonzero(k > 0)[0]
        if len(active):
            reps = k[active]
            total = int(reps.sum())
            pix = np.repeat(active, reps)
            # crossing index 1..k within each pixel's burst
            starts = np.repeat(np.cumsum(reps) - reps, reps)
            j = np.arange(total, dtype=np.int64) - starts + 1
            # crossing levels sit at l_ref + j*theta*sign; their times are
            # where the linear log trajectory from l_prev to l_new passes
            # those levels, so refining the trajectory leaves them fixed
            step = np.repeat((theta * sign)[active], reps)
            level = np.repeat(l_ref[active], reps) + j * step
            frac = (level - np.repeat(l_prev[active], reps)) / np.repeat(
                (l_new - l_prev)[active], reps
            )
            ts = (t_prev + np.floor(frac * (t_now - t_prev) + 0.5)).astype(
                np.uint64
            )
            ts_parts.append(ts)
            xs_parts.append(flat_x[pix])
            ys_parts.append(flat_y[pix])
            ps_parts.append(np.repeat(sign[active], reps).astype(np.int8))
            l_ref[active] += k[active] * theta[active] * sign[active]
        l_prev = l_new
        t_prev = t_now

    if ts_parts:
        t = np.concatenate(ts_parts)
        x = np.concatenate(xs_parts).astype(np.uint16)
        y = np.concatenate(ys_parts).astype(np.uint16)
        p = np.concatenate(ps_parts)
    else:
        t = x = y = p = ()
    stream = EventStream(
        width=width, height=height, t_start=0, t_end=t_prev,
        t=t, x=x, y=y, p=p,
    )
    return canonicalize(stream)


_FRAME_NAME = re.compile(r"(\d+)\.(pgm|ppm|pnm)$", re.IGNORECASE)


def load_frame_sequence(directory, fps: float) -> FrameSequence:
    """Load numbered PGM/PPM frames from a directory, RGB reduced to
    BT.601 luma. Files sort by their numeric suffix."""
    entries = []
    for name in os.listdir(directory):
        m = _FRAME_NAME.search(name)
        if m:
            entries.append((int(m.group(1)), name))
    if not entries:
        raise FileNotFoundError(f"no numbered PGM/PPM frames in {directory}")
    entries.sort()
    frames = tuple(
        to_grayscale(read_pnm(os.path.join(directory, name))).astype(np.float64)
        for _, name in entries
    )
    return FrameSequence(fps=fps, frames=frames)
