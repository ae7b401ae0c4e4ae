"""Grayscale video reconstruction via a per-pixel leaky integrator.

Each pixel holds a log-intensity estimate that decays exponentially at
rate alpha between events and steps by +/- c per event. Sampling the
state on a fixed period yields a grayscale video; tone mapping rescales
the states to [0, 255]. The filter is linear, so each sampled state is
the decayed sum of all earlier event impulses, computed exactly.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import HeaderMismatch
from .events import EventStream
from .pgm import write_pgm

TONE_PERCENTILE = "percentile"
TONE_FIXED = "fixed"

_STATE_MAGIC = b"RECS"
_STATE_HEADER = struct.Struct("<IIQ")


@dataclass(frozen=True)
class ReconConfig:
    """Leaky-integrator parameters.

    alpha is the decay rate in 1/s (0 gives a pure integrator), contrast
    is the log-intensity step per event, sample_period the microseconds
    between output frames.
    """

    alpha: float = 5.0
    contrast: float = 0.2
    sample_period: int = 33_333
    tone_map: str = TONE_PERCENTILE
    tone_lo: float = 1.0   # percentile, or fixed minimum state
    tone_hi: float = 99.0  # percentile, or fixed maximum state

    def validate(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.contrast <= 0:
            raise ValueError("contrast step must be positive")
        if self.sample_period <= 0:
            raise ValueError("sample period must be positive")
        if self.tone_map not in (TONE_PERCENTILE, TONE_FIXED):
            raise ValueError(f"unknown tone map {self.tone_map!r}")


@dataclass(frozen=True)
class GrayFrame:
    width: int
    height: int
    t: int
    state: np.ndarray
    gray: np.ndarray


def sample_times(stream: EventStream, sample_period: int):
    """Sample instants t_start + k*period for k = 0..floor(T/period)."""
    count = stream.duration // sample_period + 1
    return [stream.t_start + k * sample_period for k in range(count)]


def reconstruct_states(stream: EventStream, cfg: ReconConfig):
    """Per-pixel filter states at every sample instant.

    Returns (times, states) with states shaped (frames, height, width).
    Events with t <= sample instant contribute; initial state is zero
    everywhere since absolute brightness is unobservable.
    """
    cfg.validate()
    height, width = stream.height, stream.width
    times = sample_times(stream, cfg.sample_period)
    states = np.zeros((len(times), height, width), dtype=np.float64)
    state = np.zeros(height * width, dtype=np.float64)
    pix_all = stream.y.astype(np.int64) * width + stream.x.astype(np.int64)
    t_all = stream.t.astype(np.float64)
    pol_all = stream.p.astype(np.float64)

    t_prev = float(stream.t_start)
    start = 0
    for k, t_s in enumerate(times):
        if k > 0 and cfg.alpha > 0:
            state *= np.exp(-cfg.alpha * (t_s - t_prev) * 1e-6)
        # events in (t_prev, t_s]; the first window also admits t == t_start
        lo = 0 if k == 0 else start
        hi = int(np.searchsorted(stream.t, np.uint64(t_s), side="right"))
        if hi > lo:
            if cfg.alpha > 0:
                w = pol_all[lo:hi] * cfg.contrast * np.exp(
                    -cfg.alpha * (t_s - t_all[lo:hi]) * 1e-6
                )
            else:
                # integer polarity sums keep the pure-integrator state an
                # exact multiple of the contrast step
                w = pol_all[lo:hi]
            state += np.bincount(pix_all[lo:hi], weights=w, minlength=len(state))
        start = hi
        t_prev = float(t_s)
        if cfg.alpha > 0:
            states[k] = state.reshape(height, width)
        else:
            states[k] = cfg.contrast * state.reshape(height, width)
    return times, states


def tone_map(states: np.ndarray, cfg: ReconConfig) -> np.ndarray:
    """Map states linearly to [0, 255] per sequence, clamped.

    Percentile mode uses robust (lo, hi) percentiles over all states so
    isolated outlier pixels cannot crush the contrast; a degenerate
    range renders mid-gray.
    """
    if cfg.tone_map == TONE_FIXED:
        lo, hi = cfg.tone_lo, cfg.tone_hi
    else:
        lo, hi = np.percentile(states, [cfg.tone_lo, cfg.tone_hi])
    if hi - lo <= 0:
        return np.full(states.shape, 128, dtype=np.uint8)
    gray = np.floor(255.0 * (states - lo) / (hi - lo) + 0.5)
    return np.clip(gray, 0, 255).astype(np.uint8)


def reconstruct(stream: EventStream, cfg: ReconConfig | None = None):
    """Reconstruct a grayscale frame sequence from a canonical stream."""
    cfg = cfg or ReconConfig()
    times, states = reconstruct_states(stream, cfg)
    grays = tone_map(states, cfg)
    return [
        GrayFrame(
            width=stream.width, height=stream.height,
            t=times[k], state=states[k], gray=grays[k],
        )
        for k in range(len(times))
    ]


def write_frame_pgms(frames, directory, prefix: str = "recon"):
    """Write reconstructed frames as <prefix>_<index>.pgm; returns paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = os.path.join(directory, f"{prefix}_{i:06d}.pgm")
        write_pgm(frame.gray, path)
        paths.append(path)
    return paths


def write_state_raw(frame: GrayFrame, path) -> None:
    """Dump one frame's state map as little-endian f32 with a RECS header."""
    with open(path, "wb") as f:
        f.write(_STATE_MAGIC)
        f.write(_STATE_HEADER.pack(frame.width, frame.height, frame.t))
        f.write(frame.state.astype("<f4").tobytes())


def read_state_raw(path):
    """Read a RECS state dump; returns (t, float32 map)."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _STATE_MAGIC:
            raise HeaderMismatch(f"bad magic {magic!r}, expected {_STATE_MAGIC!r}")
        width, height, t = _STATE_HEADER.unpack(f.read(_STATE_HEADER.size))
        data = np.frombuffer(f.read(width * height * 4), dtype="<f4")
    return t, data.reshape(height, width).copy()
