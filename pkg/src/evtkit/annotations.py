"""VisDrone-style annotation and detector-output ingestion.

Ground truth rows follow the VisDrone-VID CSV convention
``frame,target_id,left,top,width,height,score,category,truncation,occlusion``;
category 0 rows (ignored regions) and score 0 rows are kept but flagged
as ignore. Detector dumps use the plainer
``frame,left,top,width,height,score,category``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

from .errors import FpsMismatch, NonPositiveBox, ParseError


@dataclass(frozen=True)
class GroundTruthBox:
    frame_index: int
    track_id: int
    left: float
    top: float
    width: float
    height: float
    category: int
    ignore: bool = False


@dataclass(frozen=True)
class Detection:
    frame_index: int
    left: float
    top: float
    width: float
    height: float
    category: int
    score: float


@dataclass(frozen=True)
class FrameClock:
    """Maps video frame indices onto the event-stream time axis."""

    fps: float

    def time_us(self, frame_index: int) -> int:
        return int(math.floor(frame_index * 1e6 / self.fps + 0.5))


def _parse_row(row, lineno, n_fields):
    if len(row) != n_fields:
        raise ParseError(
            f"expected {n_fields} fields, got {len(row)}", lineno
        )
    try:
        return [float(v) for v in row]
    except ValueError:
        raise ParseError(f"non-numeric field in {row!r}", lineno) from None


def read_annotations(path, image_size=None):
    """Parse a VisDrone annotation CSV into per-frame box lists.

    Returns (boxes_by_frame, errors): a dict frame -> [GroundTruthBox]
    and a list of row-numbered error strings for rejected rows. When
    ``image_size`` = (width, height) is given, boxes are clipped to the
    image; boxes vanishing under the clip are rejected.
    """
    boxes_by_frame: dict[int, list] = {}
    errors = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                vals = _parse_row(row, lineno, 10)
                frame, track, left, top, w, h, score, cat, _trunc, _occ = vals
                if w <= 0 or h <= 0:
                    raise NonPositiveBox(f"box {w}x{h} is empty", lineno)
                box = GroundTruthBox(
                    frame_index=int(frame), track_id=int(track),
                    left=left, top=top, width=w, height=h,
                    category=int(cat),
                    ignore=(int(cat) == 0 or score == 0),
                )
                if image_size is not None:
                    box = _clip_box(box, *image_size)
                    if box is None:
                        raise NonPositiveBox("box fully outside image", lineno)
            except ParseError as exc:
                errors.append(str(exc))
                continue
            boxes_by_frame.setdefault(box.frame_index, []).append(box)
    return boxes_by_frame, errors


def read_detections(path):
    """Parse a detector dump CSV into per-frame Detection lists."""
    dets_by_frame: dict[int, list] = {}
    errors = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                vals = _parse_row(row, lineno, 7)
                frame, left, top, w, h, score, cat = vals
                if w <= 0 or h <= 0:
                    raise NonPositiveBox(f"box {w}x{h} is empty", lineno)
                if not 0.0 <= score <= 1.0:
                    raise ParseError(f"score {score} outside [0, 1]", lineno)
            except ParseError as exc:
                errors.append(str(exc))
                continue
            det = Detection(
                frame_index=int(frame), left=left, top=top,
                width=w, height=h, category=int(cat), score=score,
            )
            dets_by_frame.setdefault(det.frame_index, []).append(det)
    return dets_by_frame, errors


def _clip_box(box: GroundTruthBox, img_w, img_h):
    left = max(box.left, 0.0)
    top = max(box.top, 0.0)
    right = min(box.left + box.width, float(img_w))
    bottom = min(box.top + box.height, float(img_h))
    if right - left <= 0 or bottom - top <= 0:
        return None
    return replace(box, left=left, top=top, width=right - left, height=bottom - top)


def align(boxes_by_frame, clock: FrameClock, bins):
    """Attach each frame's boxes to the ECM bin containing its timestamp.

    ``bins`` is a sequence of EcmFrame with half-open [t0, t1) bounds;
    a frame landing exactly on a boundary goes to the later bin. Frames
    past the stream end are returned in ``out_of_range``, not dropped
    silently; frames more than one bin past the end raise FpsMismatch.

    Ground-truth duplicates within a bin (same track_id, window wider
    than the frame period) keep only the latest frame's box, so a bin
    evaluates as a single image.
    """
    if not bins:
        return {}, sorted(boxes_by_frame)
    starts = [b.t0 for b in bins]
    end = bins[-1].t1
    window = bins[0].t1 - bins[0].t0 if len(bins) == 1 else bins[1].t0 - bins[0].t0
    out_of_range = []
    per_bin: dict[int, dict] = {}
    for frame_index in sorted(boxes_by_frame):
        t = clock.time_us(frame_index)
        if t >= end:
            if t > end + window:
                raise FpsMismatch(
                    f"frame {frame_index} at t={t} us exceeds stream end "
                    f"{end} us by more than one bin"
                )
            out_of_range.append(frame_index)
            continue
        if t < starts[0]:
            out_of_range.append(frame_index)
            continue
        # last bin whose t0 <= t (bins are contiguous and sorted)
        idx = _bin_index(starts, t)
        slot = per_bin.setdefault(idx, {})
        for box in boxes_by_frame[frame_index]:
            # later frames overwrite earlier ones for the same track
            slot[box.track_id] = box
    aligned = {idx: list(slot.values()) for idx, slot in per_bin.items()}
    return aligned, out_of_range


def align_detections(dets_by_frame, clock: FrameClock, bins):
    """Like :func:`align` but for detections, which carry no track ids;
    every box attaches."""
    if not bins:
        return {}, sorted(dets_by_frame)
    starts = [b.t0 for b in bins]
    end = bins[-1].t1
    window = bins[0].t1 - bins[0].t0 if len(bins) == 1 else bins[1].t0 - bins[0].t0
    out_of_range = []
    per_bin: dict[int, list] = {}
    for frame_index in sorted(dets_by_frame):
        t = clock.time_us(frame_index)
        if t >= end or t < starts[0]:
            if t > end + window:
                raise FpsMismatch(
                    f"frame {frame_index} at t={t} us exceeds stream end "
                    f"{end} us by more than one bin"
                )
            out_of_range.append(frame_index)
            continue
        per_bin.setdefault(_bin_index(starts, t), []).extend(
            dets_by_frame[frame_index]
        )
    return per_bin, out_of_range


def _bin_index(starts, t):
    lo, hi = 0, len(starts) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if starts[mid] <= t:
            lo = mid
        else:
            hi = mid - 1
    return lo
