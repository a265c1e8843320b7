"""CULane-style mask-IoU F1 and Tusimple-style point-accuracy evaluation.

Lanes are rasterized as fixed-width strokes on an integer pixel grid (endpoints
snapped with round-half-up); a pixel belongs to a stroke when its center lies
within half the stroke width of a segment.  Matching is greedy on descending
IoU, which agrees with exhaustive matching at typical lane counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .curves import as_points

__all__ = [
    "EvalResult",
    "TusimpleResult",
    "rasterize_stroke",
    "lane_iou",
    "match_and_score",
    "tusimple_accuracy",
    "CULANE_SIZE",
    "CULANE_STROKE_WIDTH",
    "TUSIMPLE_SIZE",
    "TUSIMPLE_X_TOLERANCE",
    "TUSIMPLE_MATCH_THRESHOLD",
]

CULANE_SIZE = (1640, 590)  # (W, H)
CULANE_STROKE_WIDTH = 30.0  # at 590-row resolution, scaled by H/590 elsewhere
TUSIMPLE_SIZE = (1280, 720)
TUSIMPLE_X_TOLERANCE = 20.0
TUSIMPLE_MATCH_THRESHOLD = 0.85
ABSENT_X = -2.0


@dataclass(frozen=True)
class EvalResult:
    """True/false positive and negative counts with precision, recall, and F1."""

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "EvalResult":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (2.0 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        return cls(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class TusimpleResult:
    """Point accuracy plus false-positive and false-negative lane rates."""

    accuracy: float
    fp_rate: float
    fn_rate: float

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "fp_rate": self.fp_rate,
                "fn_rate": self.fn_rate}


def _round_half_up(a: np.ndarray) -> np.ndarray:
    return np.floor(a + 0.5)


def rasterize_stroke(poly, width: float, canvas: Tuple[int, int]) -> np.ndarray:
    """Boolean (H, W) mask of a polyline stroked with the given width.

    Endpoints snap to the integer pixel grid with round-half-up; a pixel center
    (x, y) is covered when within width/2 of some snapped segment.
    """
    if width <= 0:
        raise ValueError("stroke width must be positive")
    w, h = int(canvas[0]), int(canvas[1])
    pts = _round_half_up(as_points(poly))
    mask = np.zeros((h, w), dtype=bool)
    radius = width / 2.0
    for a, b in zip(pts[:-1], pts[1:]):
        x0 = max(int(np.floor(min(a[0], b[0]) - radius)), 0)
        x1 = min(int(np.ceil(max(a[0], b[0]) + radius)), w - 1)
        y0 = max(int(np.floor(min(a[1], b[1]) - radius)), 0)
        y1 = min(int(np.ceil(max(a[1], b[1]) + radius)), h - 1)
        if x1 < x0 or y1 < y0:
            continue
        xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        d = b - a
        len2 = d @ d
        px = xs - a[0]
        py = ys - a[1]
        if len2 > 0:
            t = np.clip((px * d[0] + py * d[1]) / len2, 0.0, 1.0)
        else:
            t = np.zeros_like(px, dtype=float)
        dist2 = (px - t * d[0]) ** 2 + (py - t * d[1]) ** 2
        inside = dist2 <= radius * radius
        mask[ys[inside], xs[inside]] = True
    return mask


def lane_iou(pred, gt, width: float, canvas: Tuple[int, int]) -> float:
    """IoU of two lanes rasterized as strokes of the given width on the canvas."""
    a = rasterize_stroke(pred, width, canvas)
    b = rasterize_stroke(gt, width, canvas)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def match_and_score(preds: Sequence, gts: Sequence, iou_thresh: float = 0.5,
                    width: float = CULANE_STROKE_WIDTH,
                    canvas: Tuple[int, int] = CULANE_SIZE) -> EvalResult:
    """One-to-one lane matching by IoU with greedy descending-IoU selection.

    Pairs with IoU below the threshold never match; unmatched predictions are
    false positives and unmatched ground truths false negatives.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise ValueError("iou_thresh must lie in (0, 1)")
    pred_masks = [rasterize_stroke(p, width, canvas) for p in preds]
    gt_masks = [rasterize_stroke(g, width, canvas) for g in gts]
    pairs = []
    for i, pm in enumerate(pred_masks):
        p_area = np.count_nonzero(pm)
        for j, gm in enumerate(gt_masks):
            inter = np.count_nonzero(pm & gm)
            union = p_area + np.count_nonzero(gm) - inter
            iou = inter / union if union > 0 else 0.0
            if iou >= iou_thresh:
                pairs.append((iou, i, j))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_p, used_g = set(), set()
    tp = 0
    for _, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        tp += 1
    return EvalResult.from_counts(tp=tp, fp=len(preds) - tp, fn=len(gts) - tp)


def _visible(xs: np.ndarray) -> np.ndarray:
    return xs != ABSENT_X


def tusimple_accuracy(preds: Sequence[Sequence[float]], gts: Sequence[Sequence[float]],
                      h_samples: Sequence[float],
                      x_tolerance: float = TUSIMPLE_X_TOLERANCE,
                      match_threshold: float = TUSIMPLE_MATCH_THRESHOLD) -> TusimpleResult:
    """Row-wise lane accuracy: correct points over ground-truth points.

    Lanes are x-coordinate lists aligned to h_samples with -2 marking absent
    rows.  A point counts as correct when |x_pred - x_gt| < x_tolerance.  Each
    ground truth takes its best-scoring prediction; predictions that are best
    for no ground truth (or score below the match threshold) are false
    positives, ground truths without a good enough prediction false negatives.
    Prediction lanes with no visible points are ignored.
    """
    n_rows = len(h_samples)
    gt_lanes = [np.asarray(g, dtype=float) for g in gts]
    pred_lanes = [np.asarray(p, dtype=float) for p in preds]
    for lane in gt_lanes + pred_lanes:
        if len(lane) != n_rows:
            raise ValueError("every lane must have one x per h_sample row")
    pred_lanes = [p for p in pred_lanes if np.any(_visible(p))]

    total_correct = 0
    total_points = 0
    fn = 0
    matched_preds = set()
    for g in gt_lanes:
        vis = _visible(g)
        n_vis = int(np.count_nonzero(vis))
        total_points += n_vis
        if n_vis == 0:
            continue
        best_correct, best_idx = 0, None
        for pi, p in enumerate(pred_lanes):
            correct = int(np.count_nonzero(
                vis & _visible(p) & (np.abs(p - g) < x_tolerance)))
            if correct > best_correct:
                best_correct, best_idx = correct, pi
        total_correct += best_correct
        if best_idx is not None and best_correct / n_vis >= match_threshold:
            matched_preds.add(best_idx)
        else:
            fn += 1
    fp = len(pred_lanes) - len(matched_preds)
    n_gt = sum(1 for g in gt_lanes if np.any(_visible(g)))
    return TusimpleResult(
        accuracy=total_correct / total_points if total_points > 0 else 0.0,
        fp_rate=fp / len(pred_lanes) if pred_lanes else 0.0,
        fn_rate=fn / n_gt if n_gt else 0.0,
    )
