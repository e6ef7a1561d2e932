"""Detection-versus-ground-truth evaluation: greedy IoU matching, PR curves,
per-class average precision, mAP, and fixed-threshold precision/recall/F1.

Matching follows the Pascal VOC convention: detections are ranked by
descending confidence, each one may claim the highest-IoU not-yet-claimed
ground-truth box of its class in its image, a claim counts as a true
positive only when IoU is *strictly* above the threshold, and duplicate
detections of an already-claimed box are false positives.

AP comes in two flavours: ``all_points`` integrates the precision envelope
over recall (the VOC-2010 rule) and ``eleven_point`` averages interpolated
precision at recalls 0.0, 0.1, ..., 1.0 (the older VOC rule).  mAP averages
AP over the classes that have at least one ground-truth box; classes absent
from the ground truth are excluded rather than scored zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotations import LabeledImage
from .geometry import iou

AP_MODES = ("all_points", "eleven_point")


@dataclass(frozen=True)
class Detection:
    """A predicted box: image id, class, confidence, normalized center/size."""

    image_id: str
    class_id: int
    confidence: float
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0
                and 0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(
                f"box out of range: ({self.cx}, {self.cy}, {self.w}, {self.h})")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)


def parse_detections(text: str, class_count: int) -> list[Detection]:
    """Parse a detections file: one
    ``<image_id> <class_id> <confidence> <cx> <cy> <w> <h>`` per line."""
    if class_count < 1:
        raise ValueError("class_count must be >= 1")
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ValueError(f"expected 7 fields, got {len(parts)}, line {lineno}")
        image_id = parts[0]
        try:
            class_id = int(parts[1])
            numbers = [float(p) for p in parts[2:]]
        except ValueError:
            raise ValueError(f"non-numeric value, line {lineno}") from None
        if not 0 <= class_id < class_count:
            raise ValueError(
                f"class_id {class_id} out of range [0, {class_count}), line {lineno}")
        try:
            out.append(Detection(image_id, class_id, *numbers))
        except ValueError as exc:
            raise ValueError(f"{exc}, line {lineno}") from None
    return out


@dataclass
class MatchResult:
    """Detections in ranked order with their TP flags, plus per-class totals."""

    ranked: list[Detection]
    tp_flags: list[bool]
    gt_per_class: dict[int, int]

    @property
    def fn_per_class(self) -> dict[int, int]:
        tp = {c: 0 for c in self.gt_per_class}
        for det, flag in zip(self.ranked, self.tp_flags):
            if flag:
                tp[det.class_id] += 1
        return {c: self.gt_per_class[c] - tp[c] for c in self.gt_per_class}


def _rank_key(det: Detection, index: int):
    # Total deterministic order: confidence desc, then content, so that the
    # result is invariant under permutation of the input list.
    return (-det.confidence, det.image_id, det.class_id,
            det.cx, det.cy, det.w, det.h, index)


def match_detections(dets: list[Detection], truth: list[LabeledImage],
                     iou_thr: float) -> MatchResult:
    """Greedy confidence-ordered matching of detections to ground truth."""
    if not (0.0 < iou_thr < 1.0):
        raise ValueError(f"iou_thr must be in (0, 1), got {iou_thr}")
    gt_index: dict[str, list] = {}
    gt_per_class: dict[int, int] = {}
    for image in truth:
        entries = gt_index.setdefault(image.id, [])
        for box in image.boxes:
            entries.append([box.class_id, box.corners, False])  # [class, corners, claimed]
            gt_per_class[box.class_id] = gt_per_class.get(box.class_id, 0) + 1
    unknown = sorted({d.image_id for d in dets} - gt_index.keys())
    if unknown:
        raise ValueError(f"unknown image_id(s) in detections: {', '.join(unknown[:5])}")

    ranked = [det for _, det in sorted(
        ((_rank_key(det, i), det) for i, det in enumerate(dets)), key=lambda kv: kv[0])]
    flags = []
    for det in ranked:
        best_iou, best_entry = 0.0, None
        for entry in gt_index[det.image_id]:
            if entry[0] != det.class_id or entry[2]:
                continue
            overlap = iou(det.corners, entry[1])
            if overlap > best_iou:
                best_iou, best_entry = overlap, entry
        if best_entry is not None and best_iou > iou_thr:
            best_entry[2] = True
            flags.append(True)
        else:
            flags.append(False)
    return MatchResult(ranked=ranked, tp_flags=flags, gt_per_class=gt_per_class)


def average_precision(flags, total_gt: int, mode: str = "all_points") -> float:
    """AP of one class from its ranked TP/FP flags and ground-truth count."""
    if total_gt < 1:
        raise ValueError("average_precision needs at least one ground-truth box")
    if mode not in AP_MODES:
        raise ValueError(f"mode must be one of {AP_MODES}, got {mode!r}")
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return 0.0
    cum_tp = np.cumsum(flags)
    recall = cum_tp / total_gt
    precision = cum_tp / np.arange(1, flags.size + 1)
    if mode == "eleven_point":
        # recall >= level/10 decided in exact integer arithmetic
        interp = [precision[cum_tp * 10 >= level * total_gt].max(initial=0.0)
                  for level in range(11)]
        return float(np.mean(interp))
    # all_points: integrate the precision envelope over recall
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    changed = np.nonzero(mrec[1:] != mrec[:-1])[0] + 1
    return float(np.sum((mrec[changed] - mrec[changed - 1]) * mpre[changed]))


@dataclass(frozen=True)
class ClassMetrics:
    ap: float
    tp: int
    fp: int
    fn: int


@dataclass
class EvalReport:
    per_class: dict[int, ClassMetrics]
    mean_ap: float
    precision: float
    recall: float
    f1: float
    iou_threshold: float
    conf_threshold: float
    ap_mode: str


def evaluate(dets: list[Detection], truth: list[LabeledImage],
             iou_thr: float = 0.5, conf_thr: float = 0.25,
             mode: str = "all_points") -> EvalReport:
    """Full evaluation.  AP/mAP use every detection (threshold-free ranking);
    precision/recall/F1 and the per-class counts consider only detections
    with confidence >= ``conf_thr``."""
    result = match_detections(dets, truth, iou_thr)

    flags_per_class: dict[int, list[bool]] = {}
    for det, flag in zip(result.ranked, result.tp_flags):
        flags_per_class.setdefault(det.class_id, []).append(flag)

    per_class = {}
    aps = []
    for class_id in sorted(result.gt_per_class):
        gt = result.gt_per_class[class_id]
        ap = average_precision(flags_per_class.get(class_id, []), gt, mode)
        tp = fp = 0
        for det, flag in zip(result.ranked, result.tp_flags):
            if det.class_id == class_id and det.confidence >= conf_thr:
                tp, fp = (tp + 1, fp) if flag else (tp, fp + 1)
        per_class[class_id] = ClassMetrics(ap=ap, tp=tp, fp=fp, fn=gt - tp)
        aps.append(ap)
    mean_ap = float(np.mean(aps)) if aps else 0.0

    # overall threshold counts include detections of classes without ground
    # truth (they cannot match, so they are false positives)
    tp_total = fp_total = 0
    for det, flag in zip(result.ranked, result.tp_flags):
        if det.confidence >= conf_thr:
            tp_total, fp_total = (tp_total + 1, fp_total) if flag else (tp_total, fp_total + 1)
    gt_total = sum(result.gt_per_class.values())
    precision = tp_total / (tp_total + fp_total) if tp_total + fp_total else 0.0
    recall = tp_total / gt_total if gt_total else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return EvalReport(per_class=per_class, mean_ap=mean_ap, precision=precision,
                      recall=recall, f1=f1, iou_threshold=iou_thr,
                      conf_threshold=conf_thr, ap_mode=mode)


def select_best_checkpoint(reports: list[tuple[str, EvalReport]]) -> str:
    """Label of the report with the highest mAP; ties go to the earliest
    entry (less training wins)."""
    if not reports:
        raise ValueError("no reports to compare")
    best_label, best_map = reports[0][0], reports[0][1].mean_ap
    for label, report in reports[1:]:
        if report.mean_ap > best_map:
            best_label, best_map = label, report.mean_ap
    return best_label


def format_report(report: EvalReport, classes: list[str] | None = None) -> str:
    """Human-readable table."""
    def class_label(cid: int) -> str:
        if classes and 0 <= cid < len(classes):
            return f"{cid} {classes[cid]}"
        return str(cid)

    lines = [
        f"AP mode: {report.ap_mode}   IoU > {report.iou_threshold:g}   "
        f"conf >= {report.conf_threshold:g}",
        f"{'class':<20} {'ap':>8} {'tp':>6} {'fp':>6} {'fn':>6}",
    ]
    for cid in sorted(report.per_class):
        m = report.per_class[cid]
        lines.append(f"{class_label(cid):<20} {m.ap:>8.4f} {m.tp:>6} {m.fp:>6} {m.fn:>6}")
    lines.append(
        f"mAP {report.mean_ap:.4f}   precision {report.precision:.4f}   "
        f"recall {report.recall:.4f}   F1 {report.f1:.4f}")
    return "\n".join(lines)


def report_to_csv(report: EvalReport, classes: list[str] | None = None) -> str:
    """Machine-readable CSV: one ``class,ap,tp,fp,fn`` row per class plus a
    ``mAP`` summary row with the totals."""
    rows = ["class,ap,tp,fp,fn"]
    tp = fp = fn = 0
    for cid in sorted(report.per_class):
        m = report.per_class[cid]
        label = classes[cid] if classes and 0 <= cid < len(classes) else str(cid)
        rows.append(f"{label},{m.ap:.6f},{m.tp},{m.fp},{m.fn}")
        tp, fp, fn = tp + m.tp, fp + m.fp, fn + m.fn
    rows.append(f"mAP,{report.mean_ap:.6f},{tp},{fp},{fn}")
    return "\n".join(rows) + "\n"
