"""Scikit-learn style transformer wrappers around the pipeline stages.

Each transformer is stateless (fit only validates parameters and returns
self) so the stages compose with sklearn pipelines and parameter search
via get_params/set_params. Inputs and outputs are evtkit domain objects
(FrameSequence, EventStream) rather than 2-D feature matrices.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .events import EventStream
from .reconstruction import ReconConfig, reconstruct
from .representations import (
    MODE_SIGNED,
    NORM_PER_SEQUENCE,
    build_ecm,
    build_voxel_grid,
)
from .simulate import FrameSequence, SimulatorConfig, simulate


def _check_stream(X) -> EventStream:
    if not isinstance(X, EventStream):
        raise TypeError(f"expected an EventStream, got {type(X).__name__}")
    return X


class EventSimulator(BaseEstimator, TransformerMixin):
    """Transform a FrameSequence into a canonical EventStream."""

    def __init__(self, theta_pos=0.2, theta_neg=0.2, linlog_knee=20.0,
                 max_events_per_pixel_per_interval=None):
        self.theta_pos = theta_pos
        self.theta_neg = theta_neg
        self.linlog_knee = linlog_knee
        self.max_events_per_pixel_per_interval = max_events_per_pixel_per_interval

    def _config(self) -> SimulatorConfig:
        cfg = SimulatorConfig(
            theta_pos=self.theta_pos,
            theta_neg=self.theta_neg,
            linlog_knee=self.linlog_knee,
            max_events_per_pixel_per_interval=(
                self.max_events_per_pixel_per_interval
            ),
        )
        cfg.validate()
        return cfg

    def fit(self, X=None, y=None):
        self._config()
        return self

    def transform(self, X: FrameSequence) -> EventStream:
        if not isinstance(X, FrameSequence):
            raise TypeError(f"expected a FrameSequence, got {type(X).__name__}")
        return simulate(X, self._config())


class EventCountMapper(BaseEstimator, TransformerMixin):
    """Transform an EventStream into an EcmSequence."""

    def __init__(self, window_us=100_000, mode=MODE_SIGNED,
                 normalization=NORM_PER_SEQUENCE):
        self.window_us = window_us
        self.mode = mode
        self.normalization = normalization

    def fit(self, X=None, y=None):
        if self.window_us <= 0:
            raise ValueError("window_us must be positive")
        return self

    def transform(self, X: EventStream):
        return build_ecm(
            _check_stream(X), self.window_us, self.mode, self.normalization
        )


class VoxelGridBuilder(BaseEstimator, TransformerMixin):
    """Transform an EventStream into a (bins, h, w) voxel grid array."""

    def __init__(self, num_time_bins=10, t0=None, t1=None):
        self.num_time_bins = num_time_bins
        self.t0 = t0
        self.t1 = t1

    def fit(self, X=None, y=None):
        if self.num_time_bins < 1:
            raise ValueError("num_time_bins must be at least 1")
        return self

    def transform(self, X: EventStream):
        stream = _check_stream(X)
        t0 = stream.t_start if self.t0 is None else self.t0
        t1 = stream.t_end if self.t1 is None else self.t1
        return build_voxel_grid(stream, t0, t1, self.num_time_bins)


class LeakyReconstructor(BaseEstimator, TransformerMixin):
    """Transform an EventStream into a list of reconstructed GrayFrames."""

    def __init__(self, alpha=5.0, contrast=0.2, sample_period_us=33_333,
                 tone_map="percentile", tone_lo=1.0, tone_hi=99.0):
        self.alpha = alpha
        self.contrast = contrast
        self.sample_period_us = sample_period_us
        self.tone_map = tone_map
        self.tone_lo = tone_lo
        self.tone_hi = tone_hi

    def _config(self) -> ReconConfig:
        cfg = ReconConfig(
            alpha=self.alpha, contrast=self.contrast,
            sample_period=self.sample_period_us, tone_map=self.tone_map,
            tone_lo=self.tone_lo, tone_hi=self.tone_hi,
        )
        cfg.validate()
        return cfg

    def fit(self, X=None, y=None):
        self._config()
        return self

    def transform(self, X: EventStream):
        return reconstruct(_check_stream(X), self._config())
