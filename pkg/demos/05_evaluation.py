"""Scoring a detector: IoU matching, AP/mAP, precision/recall/F1, and
checkpoint comparison for early stopping.

Run:  python3 demos/05_evaluation.py
"""

from yoloprep import (
    CenterBox,
    Detection,
    LabeledImage,
    average_precision,
    evaluate,
    format_report,
    parse_detections,
    select_best_checkpoint,
)

# ground truth: 3 boxes across 2 images
truth = [
    LabeledImage("im1", 100, 100, [CenterBox(0, 0.3, 0.3, 0.2, 0.2),
                                   CenterBox(0, 0.7, 0.7, 0.2, 0.2)]),
    LabeledImage("im2", 100, 100, [CenterBox(0, 0.5, 0.5, 0.2, 0.2)]),
]

# model output, as the toolkit's detections format
detections_text = """\
im1 0 0.90 0.3 0.3 0.2 0.2
im2 0 0.80 0.5 0.5 0.2 0.2
im1 0 0.70 0.05 0.95 0.1 0.1
"""
dets = parse_detections(detections_text, class_count=1)

report = evaluate(dets, truth, iou_thr=0.5, conf_thr=0.5)
print(format_report(report, classes=["stoma"]))

# the ranking [TP, TP, FP] over 3 ground-truth boxes, by hand:
#   all-points AP integrates the precision envelope -> 2/3
#   eleven-point AP averages interpolated precision -> 7/11
flags = [True, True, False]
print("\nall-points AP:  ", average_precision(flags, 3, "all_points"))
print("eleven-point AP:", average_precision(flags, 3, "eleven_point"))

# early stopping: evaluate snapshots at different training lengths, keep the
# best mAP (ties go to the shorter training)
perfect = [Detection(img.id, b.class_id, 0.95, b.cx, b.cy, b.w, b.h)
           for img in truth for b in img.boxes]
checkpoints = [
    ("10000 iters", evaluate(dets[:2], truth)),
    ("20000 iters", evaluate(perfect, truth)),
    ("30000 iters", evaluate(dets, truth)),
]
print("\ncheckpoint comparison:")
for label, rep in checkpoints:
    print(f"  {label}: mAP {rep.mean_ap:.4f}")
print("best:", select_best_checkpoint(checkpoints))
