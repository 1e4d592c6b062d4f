"""
Detection scoring: greedy IoU matching, PR curves, AP@50 and a precision
operating point.

AP uses all-point interpolation by default (exact area under the precision
envelope). ``interpolation="101"`` gives the 101-point variant used by
YOLO-family tooling; the two usually differ by well under 0.01.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .boxes import Annotation, Box, NormalizedBox, iou, to_pixel
from .dataset_io import LabelParseError, parse_label_file


@dataclass(frozen=True)
class Detection:
    class_id: int
    box: Box
    confidence: float

    def __post_init__(self):
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


def match_detections(
    dets: Sequence[Detection], gts: Sequence[Annotation], iou_thresh: float = 0.5
) -> Tuple[List[bool], int]:
    """Greedy matching for one image.

    Detections are visited by descending confidence (stable on ties). Each
    takes the unmatched same-class ground truth with the highest IoU (lowest
    index on IoU ties) if that IoU reaches ``iou_thresh``.

    Returns:
        TP flags aligned with ``dets`` and the number of unmatched ground truths.
    """
    if not 0.0 < iou_thresh <= 1.0:
        raise ValueError("iou_thresh must lie in (0, 1]")
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    matched = [False] * len(gts)
    tp = [False] * len(dets)
    for i in order:
        d = dets[i]
        best, best_iou = -1, -1.0
        for j, g in enumerate(gts):
            if matched[j] or g.class_id != d.class_id:
                continue
            v = iou(d.box, g.box)
            if v > best_iou:
                best, best_iou = j, v
        if best >= 0 and best_iou >= iou_thresh:
            matched[best] = True
            tp[i] = True
    return tp, matched.count(False)


def pr_points(
    flags: Sequence[bool], total_gt: int, confidences: Optional[Sequence[float]] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cumulative (precision, recall, tp_count) over confidence-sorted flags.

    With ``confidences`` only the last point of each equal-confidence run is
    kept, since a threshold cannot split tied detections.
    """
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int64)
    ctp = np.cumsum(flags)
    cfp = np.cumsum(~flags)
    if confidences is not None:
        conf = np.asarray(confidences, dtype=np.float64)
        keep = np.append(conf[1:] != conf[:-1], True)
        ctp, cfp = ctp[keep], cfp[keep]
    precision = ctp / (ctp + cfp)
    recall = ctp / total_gt if total_gt > 0 else np.zeros_like(precision, dtype=np.float64)
    return precision, recall, ctp


def average_precision(
    flags: Sequence[bool],
    total_gt: int,
    confidences: Optional[Sequence[float]] = None,
    interpolation: str = "all",
) -> float:
    """AP of a confidence-sorted TP/FP sequence against ``total_gt`` ground truths."""
    if total_gt < 0:
        raise ValueError("total_gt must be >= 0")
    if total_gt == 0 or len(flags) == 0:
        return 0.0
    precision, recall, _ = pr_points(flags, total_gt, confidences)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    if interpolation == "all":
        steps = np.diff(np.concatenate(([0.0], recall)))
        return float(np.sum(steps * envelope))
    if interpolation == "101":
        levels = np.linspace(0.0, 1.0, 101)
        idx = np.searchsorted(recall, levels, side="left")
        vals = np.where(idx < len(recall), envelope[np.minimum(idx, len(recall) - 1)], 0.0)
        return float(vals.mean())
    raise ValueError(f"unknown interpolation {interpolation!r}")


@dataclass
class EvalReport:
    per_class_ap: Dict[int, float]
    map50: float
    precision: float
    recall: float
    f1: float
    threshold: Optional[float]
    tp: int
    fp: int
    fn: int
    curve: List[Tuple[float, float]] = field(default_factory=list)
    iou_thresh: float = 0.5
    interpolation: str = "all"

    def to_dict(self) -> dict:
        return {
            "map50": self.map50,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "iou_thresh": self.iou_thresh,
            "interpolation": self.interpolation,
            "per_class_ap": {str(k): v for k, v in sorted(self.per_class_ap.items())},
            "curve": [[r, p] for r, p in self.curve],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        thr = "n/a" if self.threshold is None else f"{self.threshold:.4f}"
        lines = [
            f"mAP@{self.iou_thresh:g}: {self.map50:.4f}",
            f"precision: {self.precision:.4f}",
            f"recall: {self.recall:.4f}",
            f"f1: {self.f1:.4f} (confidence threshold {thr})",
            f"tp: {self.tp}  fp: {self.fp}  fn: {self.fn}",
        ]
        for cls, ap in sorted(self.per_class_ap.items()):
            lines.append(f"  class {cls}: AP {ap:.4f}")
        return "\n".join(lines) + "\n"


def _operating_point(
    flags: np.ndarray, confs: np.ndarray, total_gt: int, conf: Optional[float]
) -> Tuple[float, float, float, Optional[float], int, int]:
    """(precision, recall, f1, threshold, tp, fp) at best F1 or at a fixed ``conf``."""
    if conf is not None:
        keep = confs >= conf
        tp = int(flags[keep].sum())
        fp = int(keep.sum()) - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / total_gt if total_gt else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return p, r, f1, conf, tp, fp
    if flags.size == 0:
        return 0.0, 0.0, 0.0, None, 0, 0
    precision, recall, ctp = pr_points(flags, total_gt, confs)
    ends = np.flatnonzero(np.append(confs[1:] != confs[:-1], True))
    best = None
    for k in range(len(precision)):
        p, r = float(precision[k]), float(recall[k])
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        # strict improvement keeps the higher threshold on ties
        if best is None or f1 > best[2]:
            n_kept = int(ends[k]) + 1
            best = (p, r, f1, float(confs[ends[k]]), int(ctp[k]), n_kept - int(ctp[k]))
    return best


def evaluate(
    predictions: Mapping[str, Sequence[Detection]],
    ground_truth: Mapping[str, Sequence[Annotation]],
    iou_thresh: float = 0.5,
    interpolation: str = "all",
    conf: Optional[float] = None,
) -> EvalReport:
    """Score predictions against ground truth keyed by image id.

    mAP averages AP over classes that have at least one ground truth box.
    Precision and recall are reported at the confidence threshold that
    maximizes F1 over the pooled PR curve, or at ``conf`` when given.
    """
    unknown = sorted(set(predictions) - set(ground_truth))
    if unknown:
        raise ValueError(f"predictions reference unknown image ids: {', '.join(unknown)}")

    per_class: Dict[int, List[Tuple[float, bool]]] = {}
    gt_count: Dict[int, int] = {}
    pooled: List[Tuple[float, bool]] = []
    for image_id in sorted(ground_truth):
        gts = list(ground_truth[image_id])
        dets = list(predictions.get(image_id, ()))
        for g in gts:
            gt_count[g.class_id] = gt_count.get(g.class_id, 0) + 1
        tp, _ = match_detections(dets, gts, iou_thresh)
        for d, flag in zip(dets, tp):
            per_class.setdefault(d.class_id, []).append((d.confidence, flag))
            pooled.append((d.confidence, flag))

    def sorted_arrays(items):
        # stable sort keeps input order among equal confidences
        items = sorted(items, key=lambda t: -t[0])
        return (
            np.array([f for _, f in items], dtype=bool),
            np.array([c for c, _ in items], dtype=np.float64),
        )

    per_class_ap = {}
    for cls, total in gt_count.items():
        flags, confs = sorted_arrays(per_class.get(cls, []))
        per_class_ap[cls] = average_precision(flags, total, confs, interpolation)
    map50 = float(np.mean(list(per_class_ap.values()))) if per_class_ap else 0.0

    total_gt = sum(gt_count.values())
    flags, confs = sorted_arrays(pooled)
    p, r, f1, thr, tp, fp = _operating_point(flags, confs, total_gt, conf)
    precision, recall, _ = pr_points(flags, total_gt, confs)
    curve = [(float(rr), float(pp)) for rr, pp in zip(recall, precision)]
    return EvalReport(
        per_class_ap=per_class_ap,
        map50=map50,
        precision=p,
        recall=r,
        f1=f1,
        threshold=thr,
        tp=tp,
        fp=fp,
        fn=total_gt - tp,
        curve=curve,
        iou_thresh=iou_thresh,
        interpolation=interpolation,
    )


# Prediction files ----------------------------------------------------------


def parse_prediction_file(text: str, width: float = 1.0, height: float = 1.0) -> List[Detection]:
    """Parse ``class conf cx cy w h`` lines (normalized boxes)."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 6:
            raise LabelParseError(f"expected 6 fields, got {len(tokens)}", lineno)
        try:
            cls, conf, cx, cy, w, h = (float(t) for t in tokens)
        except ValueError:
            raise LabelParseError("non-numeric token", lineno) from None
        if cls < 0 or cls != int(cls):
            raise LabelParseError(f"invalid class id {tokens[0]!r}", lineno)
        if not 0.0 <= conf <= 1.0:
            raise LabelParseError("confidence outside [0, 1]", lineno)
        if not all(0.0 <= v <= 1.0 for v in (cx, cy, w, h)):
            raise LabelParseError("box value outside [0, 1]", lineno)
        out.append(Detection(int(cls), to_pixel(NormalizedBox(cx, cy, w, h), width, height), conf))
    return out


def load_label_dir(root: Union[str, Path], strict: bool = True) -> Dict[str, List[Annotation]]:
    """Ground truth keyed by file stem (relative path without suffix), in unit frame coordinates.

    IoU is invariant to per-axis scaling, so evaluation needs no image sizes.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"label directory not found: {root}")
    out = {}
    for path in sorted(root.rglob("*.txt")):
        key = path.relative_to(root).with_suffix("").as_posix()
        out[key] = parse_label_file(path.read_text(encoding="utf-8"), 1.0, 1.0, strict=strict, path=path)
    return out


def load_prediction_dir(root: Union[str, Path], fmt: str = "pred") -> Dict[str, List[Detection]]:
    """Predictions keyed by file stem. ``fmt="label"`` reads plain label files at confidence 1."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"prediction directory not found: {root}")
    out = {}
    for path in sorted(root.rglob("*.txt")):
        key = path.relative_to(root).with_suffix("").as_posix()
        text = path.read_text(encoding="utf-8")
        try:
            if fmt == "label":
                anns = parse_label_file(text, 1.0, 1.0)
                out[key] = [Detection(a.class_id, a.box, 1.0) for a in anns]
            else:
                out[key] = parse_prediction_file(text)
        except LabelParseError as exc:
            raise LabelParseError(exc.reason, exc.line, path) from None
    return out
