import random

import numpy as np
import pytest

from yoloprep.annotations import CenterBox, LabeledImage
from yoloprep.evaluation import (
    Detection,
    average_precision,
    evaluate,
    format_report,
    match_detections,
    parse_detections,
    report_to_csv,
    select_best_checkpoint,
)


# --- independent oracles -----------------------------------------------------

def ap_oracle_all_points(flags, total_gt):
    """Brute-force step integration over all distinct recall values, with the
    interpolated precision found by a direct O(n^2) scan."""
    points = []
    tp = 0
    for i, flag in enumerate(flags, start=1):
        tp += int(flag)
        points.append((tp / total_gt, tp / i))
    ap = 0.0
    prev_recall = 0.0
    for i, (recall, _) in enumerate(points):
        if recall == prev_recall:
            continue
        p_interp = max(p for r, p in points[i:])  # max precision at recall >= r
        ap += (recall - prev_recall) * p_interp
        prev_recall = recall
    return ap


def ap_oracle_eleven_point(flags, total_gt):
    points = []
    tp = 0
    for i, flag in enumerate(flags, start=1):
        tp += int(flag)
        points.append((tp, tp / i))
    total = 0.0
    for level in range(11):
        # recall >= level/10, decided exactly: 10*tp >= level*total_gt
        candidates = [p for tp_count, p in points if 10 * tp_count >= level * total_gt]
        total += max(candidates) if candidates else 0.0
    return total / 11


def random_flags(rng, n):
    return [bool(rng.integers(2)) for _ in range(n)]


# --- fixtures ---------------------------------------------------------------
# 3 ground-truth boxes across 2 images; detections ranked
# [TP conf .9, TP conf .8, FP conf .7]

def three_gt_fixture():
    truth = [
        LabeledImage("im1", 100, 100, [CenterBox(0, 0.3, 0.3, 0.2, 0.2),
                                       CenterBox(0, 0.7, 0.7, 0.2, 0.2)]),
        LabeledImage("im2", 100, 100, [CenterBox(0, 0.5, 0.5, 0.2, 0.2)]),
    ]
    dets = [
        Detection("im1", 0, 0.9, 0.3, 0.3, 0.2, 0.2),   # exact match -> TP
        Detection("im2", 0, 0.8, 0.5, 0.5, 0.2, 0.2),   # exact match -> TP
        Detection("im1", 0, 0.7, 0.05, 0.95, 0.1, 0.1),  # nowhere near -> FP
    ]
    return dets, truth


class TestParseDetections:
    def test_single_line(self):
        (det,) = parse_detections("img1 0 0.90 0.5 0.5 0.2 0.2", 1)
        assert det == Detection("img1", 0, 0.9, 0.5, 0.5, 0.2, 0.2)

    def test_empty(self):
        assert parse_detections("", 1) == []

    def test_confidence_out_of_range_reports_line(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_detections("img1 0 1.5 0.5 0.5 0.2 0.2", 1)

    def test_class_out_of_range(self):
        with pytest.raises(ValueError, match="class_id 2"):
            parse_detections("img1 2 0.9 0.5 0.5 0.2 0.2", 2)

    def test_wrong_field_count(self):
        with pytest.raises(ValueError, match="7 fields"):
            parse_detections("img1 0 0.9 0.5 0.5 0.2", 1)

    def test_order_preserved(self):
        text = "a 0 0.5 0.5 0.5 0.1 0.1\nb 0 0.9 0.5 0.5 0.1 0.1\n"
        dets = parse_detections(text, 1)
        assert [d.image_id for d in dets] == ["a", "b"]


class TestMatchDetections:
    def test_perfect_match(self):
        truth = [LabeledImage("a", 10, 10, [CenterBox(0, 0.5, 0.5, 0.2, 0.2)])]
        dets = [Detection("a", 0, 0.9, 0.5, 0.5, 0.2, 0.2)]
        result = match_detections(dets, truth, 0.5)
        assert result.tp_flags == [True]
        assert result.fn_per_class == {0: 0}

    def test_duplicate_detection_is_fp(self):
        truth = [LabeledImage("a", 10, 10, [CenterBox(0, 0.5, 0.5, 0.2, 0.2)])]
        dets = [Detection("a", 0, 0.9, 0.5, 0.5, 0.2, 0.2),
                Detection("a", 0, 0.7, 0.5, 0.5, 0.2, 0.2)]
        result = match_detections(dets, truth, 0.5)
        assert result.tp_flags == [True, False]

    def test_iou_exactly_threshold_is_fp(self):
        # det and gt overlap with IoU exactly 1/3; threshold 1/3 -> strict
        truth = [LabeledImage("a", 30, 10, [CenterBox(0, 1 / 3, 0.5, 1 / 3, 1.0)])]
        dets = [Detection("a", 0, 0.9, 0.5, 0.5, 1 / 3, 1.0)]
        result = match_detections(dets, truth, 1 / 3)
        assert result.tp_flags == [False]

    def test_unknown_image_rejected(self):
        with pytest.raises(ValueError, match="ghost"):
            match_detections([Detection("ghost", 0, 0.5, 0.5, 0.5, 0.1, 0.1)],
                             [LabeledImage("a", 10, 10, [])], 0.5)

    def test_class_mismatch_never_matches(self):
        truth = [LabeledImage("a", 10, 10, [CenterBox(1, 0.5, 0.5, 0.2, 0.2)])]
        dets = [Detection("a", 0, 0.9, 0.5, 0.5, 0.2, 0.2)]
        result = match_detections(dets, truth, 0.5)
        assert result.tp_flags == [False]
        assert result.fn_per_class == {1: 1}

    def test_counting_invariants(self):
        rng = np.random.default_rng(0)
        truth, dets = [], []
        for i in range(5):
            boxes = [CenterBox(int(rng.integers(3)),
                               rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                               0.2, 0.2) for _ in range(int(rng.integers(1, 5)))]
            truth.append(LabeledImage(f"i{i}", 100, 100, boxes))
            for _ in range(int(rng.integers(0, 6))):
                dets.append(Detection(f"i{i}", int(rng.integers(3)),
                                      float(rng.uniform(0, 1)),
                                      rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                                      0.2, 0.2))
        result = match_detections(dets, truth, 0.5)
        # TP + FN = ground truth per class; TP + FP = detections per class
        for class_id, gt in result.gt_per_class.items():
            tp = sum(f for d, f in zip(result.ranked, result.tp_flags)
                     if d.class_id == class_id)
            assert tp + result.fn_per_class[class_id] == gt
        total_tp = sum(result.tp_flags)
        assert total_tp + (len(dets) - total_tp) == len(dets)

    def test_highest_iou_gt_claimed_first(self):
        truth = [LabeledImage("a", 100, 100, [CenterBox(0, 0.3, 0.5, 0.2, 0.2),
                                              CenterBox(0, 0.32, 0.5, 0.2, 0.2)])]
        # one detection dead on the second gt; a later one can still claim the first
        dets = [Detection("a", 0, 0.9, 0.32, 0.5, 0.2, 0.2),
                Detection("a", 0, 0.8, 0.3, 0.5, 0.2, 0.2)]
        result = match_detections(dets, truth, 0.5)
        assert result.tp_flags == [True, True]


class TestAveragePrecision:
    def test_fixture_all_points_two_thirds(self):
        flags = [True, True, False]
        expected = ap_oracle_all_points(flags, 3)
        assert abs(expected - 2 / 3) < 1e-12  # oracle agrees with hand math
        assert abs(average_precision(flags, 3, "all_points") - expected) < 1e-9

    def test_fixture_eleven_point(self):
        flags = [True, True, False]
        expected = ap_oracle_eleven_point(flags, 3)
        assert abs(expected - 7 / 11) < 1e-12
        assert abs(average_precision(flags, 3, "eleven_point") - expected) < 1e-9

    def test_perfect_detector_is_one_in_both_modes(self):
        for mode in ("all_points", "eleven_point"):
            assert average_precision([True] * 5, 5, mode) == pytest.approx(1.0)

    def test_empty_ranking_is_zero(self):
        assert average_precision([], 4) == 0.0

    def test_zero_gt_rejected(self):
        with pytest.raises(ValueError):
            average_precision([True], 0)

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            n = int(rng.integers(1, 21))
            flags = random_flags(rng, n)
            total_gt = max(1, sum(flags) + int(rng.integers(0, 5)))
            assert abs(average_precision(flags, total_gt, "all_points")
                       - ap_oracle_all_points(flags, total_gt)) < 1e-9
            assert abs(average_precision(flags, total_gt, "eleven_point")
                       - ap_oracle_eleven_point(flags, total_gt)) < 1e-9

    def test_range_and_tail_fp_removal_monotonicity(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            flags = random_flags(rng, int(rng.integers(2, 15)))
            total_gt = max(1, sum(flags))
            ap = average_precision(flags, total_gt)
            assert 0.0 <= ap <= 1.0
            if not flags[-1]:  # drop a trailing FP: AP must not decrease
                assert average_precision(flags[:-1], total_gt) >= ap - 1e-12


class TestEvaluate:
    def test_three_gt_fixture_metrics(self):
        dets, truth = three_gt_fixture()
        report = evaluate(dets, truth, iou_thr=0.5, conf_thr=0.5)
        assert report.mean_ap == pytest.approx(2 / 3, abs=1e-9)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)
        assert report.f1 == pytest.approx(2 / 3)
        metrics = report.per_class[0]
        assert (metrics.tp, metrics.fp, metrics.fn) == (2, 1, 1)

    def test_zero_detections(self):
        _, truth = three_gt_fixture()
        report = evaluate([], truth)
        assert report.mean_ap == 0.0
        assert report.precision == 0.0 and report.recall == 0.0 and report.f1 == 0.0
        assert report.per_class[0].fn == 3

    def test_perfect_detections(self):
        _, truth = three_gt_fixture()
        dets = [Detection(img.id, b.class_id, 1.0, b.cx, b.cy, b.w, b.h)
                for img in truth for b in img.boxes]
        report = evaluate(dets, truth)
        assert report.mean_ap == pytest.approx(1.0)
        assert report.precision == report.recall == report.f1 == 1.0

    def test_permutation_invariant_100_shuffles(self):
        dets, truth = three_gt_fixture()
        baseline = evaluate(dets, truth)
        rng = random.Random(3)
        for _ in range(100):
            shuffled = list(dets)
            rng.shuffle(shuffled)
            report = evaluate(shuffled, truth)
            assert report.mean_ap == baseline.mean_ap
            assert report.per_class == baseline.per_class

    def test_permutation_invariant_with_confidence_ties(self):
        truth = [LabeledImage("a", 100, 100, [CenterBox(0, 0.3, 0.5, 0.2, 0.2),
                                              CenterBox(0, 0.6, 0.5, 0.2, 0.2)])]
        dets = [Detection("a", 0, 0.9, 0.3, 0.5, 0.2, 0.2),
                Detection("a", 0, 0.9, 0.31, 0.5, 0.2, 0.2),
                Detection("a", 0, 0.9, 0.6, 0.5, 0.2, 0.2)]
        baseline = evaluate(dets, truth)
        rng = random.Random(4)
        for _ in range(50):
            shuffled = list(dets)
            rng.shuffle(shuffled)
            report = evaluate(shuffled, truth)
            assert report.per_class == baseline.per_class

    def test_monotone_confidence_map_leaves_ap_unchanged(self):
        dets, truth = three_gt_fixture()
        baseline = evaluate(dets, truth).mean_ap
        for mapper in (lambda c: c / 2, lambda c: c ** 2, lambda c: 0.1 + 0.8 * c):
            mapped = [Detection(d.image_id, d.class_id, mapper(d.confidence),
                                d.cx, d.cy, d.w, d.h) for d in dets]
            assert evaluate(mapped, truth).mean_ap == pytest.approx(baseline, abs=1e-12)

    def test_map_excludes_classes_without_gt(self):
        truth = [LabeledImage("a", 10, 10, [CenterBox(0, 0.5, 0.5, 0.2, 0.2)])]
        dets = [Detection("a", 0, 0.9, 0.5, 0.5, 0.2, 0.2),
                Detection("a", 1, 0.8, 0.5, 0.5, 0.2, 0.2)]  # class 1 has no GT
        report = evaluate(dets, truth)
        assert set(report.per_class) == {0}
        assert report.mean_ap == pytest.approx(1.0)
        assert report.precision == pytest.approx(0.5)  # the stray class-1 det is FP

    def test_ap_ignores_conf_threshold(self):
        dets, truth = three_gt_fixture()
        high = evaluate(dets, truth, conf_thr=0.95)
        assert high.mean_ap == pytest.approx(2 / 3, abs=1e-9)
        assert high.precision == 0.0  # nothing above 0.95

    def test_eleven_point_mode_echoed(self):
        dets, truth = three_gt_fixture()
        report = evaluate(dets, truth, mode="eleven_point")
        assert report.ap_mode == "eleven_point"
        assert report.mean_ap == pytest.approx(7 / 11, abs=1e-9)


class TestSelectBestCheckpoint:
    def _report(self, mean_ap):
        return type("R", (), {"mean_ap": mean_ap})()

    def test_argmax(self):
        reports = [("10k", self._report(0.80)), ("20k", self._report(0.91)),
                   ("30k", self._report(0.89))]
        assert select_best_checkpoint(reports) == "20k"

    def test_singleton(self):
        assert select_best_checkpoint([("only", self._report(0.5))]) == "only"

    def test_tie_prefers_earlier(self):
        reports = [("10k", self._report(0.90)), ("20k", self._report(0.90))]
        assert select_best_checkpoint(reports) == "10k"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_best_checkpoint([])


class TestReportFormatting:
    def test_text_table(self):
        dets, truth = three_gt_fixture()
        text = format_report(evaluate(dets, truth, conf_thr=0.5), ["stoma"])
        assert "0 stoma" in text
        assert "mAP 0.6667" in text

    def test_csv(self):
        dets, truth = three_gt_fixture()
        csv = report_to_csv(evaluate(dets, truth, conf_thr=0.5), ["stoma"])
        lines = csv.splitlines()
        assert lines[0] == "class,ap,tp,fp,fn"
        assert lines[1] == "stoma,0.666667,2,1,1"
        assert lines[2] == "mAP,0.666667,2,1,1"
