"""evtkit: event-camera simulation, representations, reconstruction, and
detection metrics."""

from .annotations import Detection, FrameClock, GroundTruthBox
from .deteval import EvalReport, average_precision, evaluate, iou, match
from .events import EventStream, canonicalize, concatenate, slice_stream
from .io import read_events, write_events
from .reconstruction import GrayFrame, ReconConfig, reconstruct
from .representations import (
    EcmFrame,
    EcmSequence,
    build_ecm,
    build_voxel_grid,
    normalize_to_gray,
)
from .simulate import FrameSequence, SimulatorConfig, linlog, simulate

__version__ = "0.1.0"

__all__ = [
    "Detection",
    "EcmFrame",
    "EcmSequence",
    "EvalReport",
    "EventStream",
    "FrameClock",
    "FrameSequence",
    "GrayFrame",
    "GroundTruthBox",
    "ReconConfig",
    "SimulatorConfig",
    "average_precision",
    "build_ecm",
    "build_voxel_grid",
    "canonicalize",
    "concatenate",
    "evaluate",
    "iou",
    "linlog",
    "match",
    "normalize_to_gray",
    "read_events",
    "reconstruct",
    "simulate",
    "slice_stream",
    "write_events",
]
