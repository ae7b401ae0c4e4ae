"""Detection metrics: IoU, greedy matching, AP, AP50, and COCO-style mAP.

Conventions follow the COCO protocol: 101-point interpolated AP, IoU
thresholds 0.50:0.05:0.95, greedy matching in descending score order
against the highest-IoU unmatched ground truth. Detections overlapping
an ignore region count as neither true nor false positives. Classes with
no ground truth anywhere are excluded from the means.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBox

IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
RECALL_GRID = np.linspace(0.0, 1.0, 101)
IGNORED = "ignored"
IGNORE_OVERLAP = 0.5


def _ltwh(box):
    """Extract (left, top, w, h) from a tuple or a box-like object."""
    if hasattr(box, "left"):
        return float(box.left), float(box.top), float(box.width), float(box.height)
    left, top, w, h = box
    return float(left), float(top), float(w), float(h)


def iou(a, b) -> float:
    """Intersection over union of two (left, top, w, h) boxes."""
    al, at, aw, ah = _ltwh(a)
    bl, bt, bw, bh = _ltwh(b)
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise DegenerateBox("boxes must have positive width and height")
    ix = min(al + aw, bl + bw) - max(al, bl)
    iy = min(at + ah, bt + bh) - max(at, bt)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


@dataclass
class MatchResult:
    """Greedy matching outcome for one image and one IoU threshold.

    det_labels[i] is the matched ground-truth index, None for a false
    positive, or the string "ignored" for detections absorbed by an
    ignore region.
    """

    det_labels: list
    gt_matched: list


def match(dets, gts, ignore_regions, iou_thr: float) -> MatchResult:
    """Greedily match detections (single class) to ground truth.

    Detections are processed in descending score with stable input-order
    tie-break; each takes the unmatched ground truth with the highest
    IoU >= iou_thr (IoU ties go to the lower ground-truth index).
    Unmatched detections whose IoU with any ignore region exceeds 0.5
    are marked ignored.
    """
    order = sorted(range(len(dets)), key=lambda i: -_score(dets[i]))
    det_labels = [None] * len(dets)
    gt_matched = [False] * len(gts)
    for i in order:
        best_iou = -1.0
        best_gt = None
        for g, gt in enumerate(gts):
            if gt_matched[g]:
                continue
            overlap = iou(dets[i], gt)
            # strict > keeps the lower gt index on IoU ties
            if overlap >= iou_thr and overlap > best_iou:
                best_iou = overlap
                best_gt = g
        if best_gt is not None:
            gt_matched[best_gt] = True
            det_labels[i] = best_gt
        else:
            for region in ignore_regions:
                if iou(dets[i], region) > IGNORE_OVERLAP:
                    det_labels[i] = IGNORED
                    break
    return MatchResult(det_labels=det_labels, gt_matched=gt_matched)


def _score(det):
    return float(det.score) if hasattr(det, "score") else float(det[4])


def average_precision(tp_flags, num_gt: int):
    """101-point interpolated AP from score-sorted true-positive flags.

    Returns (ap, interpolated precision over the recall grid). With no
    ground truth the AP is 0 and callers skip the class in means.
    """
    if num_gt == 0:
        return 0.0, np.zeros_like(RECALL_GRID)
    flags = np.asarray(tp_flags, dtype=bool)
    if len(flags) == 0:
        return 0.0, np.zeros_like(RECALL_GRID)
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    # precision envelope: p_interp(r) = max over r' >= r of p(r')
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    interp = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(interp.mean()), interp


@dataclass
class EvalReport:
    per_class: dict
    ap50: float
    map: float
    pr_curves: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_class": {
                str(cat): {f"{thr:.2f}": ap for thr, ap in by_thr.items()}
                for cat, by_thr in self.per_class.items()
            },
            "ap50": self.ap50,
            "map": self.map,
            "pr_curves": self.pr_curves,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        lines = [f"{'Class':<10} {'mAP':>8} {'AP 50':>8}"]
        for cat in sorted(self.per_class):
            by_thr = self.per_class[cat]
            cls_map = sum(by_thr.values()) / len(by_thr)
            lines.append(f"{cat:<10} {cls_map:>8.3f} {by_thr[0.5]:>8.3f}")
        lines.append(f"{'all':<10} {self.map:>8.3f} {self.ap50:>8.3f}")
        return "\n".join(lines)


def evaluate(dets_per_image, gts_per_image, iou_thresholds=IOU_THRESHOLDS) -> EvalReport:
    """Full evaluation over a dataset of images (or time bins).

    ``dets_per_image`` maps image id -> [Detection]; ``gts_per_image``
    maps image id -> [GroundTruthBox]. Ignore-flagged ground truth acts
    as class-agnostic ignore regions only.
    """
    image_ids = sorted(set(gts_per_image) | set(dets_per_image))
    categories = sorted(
        {
            box.category
            for boxes in gts_per_image.values()
            for box in boxes
            if not box.ignore
        }
    )
    per_class: dict = {cat: {} for cat in categories}
    pr_curves: dict = {}
    for cat in categories:
        num_gt = sum(
            1
            for boxes in gts_per_image.values()
            for box in boxes
            if not box.ignore and box.category == cat
        )
        for thr in iou_thresholds:
            flags = _pooled_tp_flags(
                dets_per_image, gts_per_image, image_ids, cat, thr
            )
            ap, interp = average_precision(flags, num_gt)
            per_class[cat][thr] = ap
            if thr == 0.5:
                pr_curves[str(cat)] = {
                    "recall": [round(r, 4) for r in RECALL_GRID.tolist()],
                    "precision": [round(p, 6) for p in interp.tolist()],
                }
    if categories:
        ap50 = float(np.mean([per_class[c][0.5] for c in categories]))
        map_ = float(
            np.mean([per_class[c][t] for c in categories for t in iou_thresholds])
        )
    else:
        ap50 = 0.0
        map_ = 0.0
    return EvalReport(per_class=per_class, ap50=ap50, map=map_, pr_curves=pr_curves)


def _pooled_tp_flags(dets_per_image, gts_per_image, image_ids, cat, thr):
    """Score-sorted TP flags pooled across images for one class/threshold."""
    pooled = []  # (score, order, is_tp or IGNORED)
    order = 0
    for image_id in image_ids:
        gts_all = gts_per_image.get(image_id, [])
        ignore_regions = [g for g in gts_all if g.ignore]
        gts = [g for g in gts_all if not g.ignore and g.category == cat]
        dets = [d for d in dets_per_image.get(image_id, []) if d.category == cat]
        result = match(dets, gts, ignore_regions, thr)
        for det, label in zip(dets, result.det_labels):
            if label == IGNORED:
                continue
            pooled.append((-_score(det), order, label is not None))
            order += 1
    pooled.sort(key=lambda item: (item[0], item[1]))
    return [is_tp for _, _, is_tp in pooled]
