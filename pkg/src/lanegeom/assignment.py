"""Border reference points, start-point label assignment, and fast NMS.

Reference points sit on the left, bottom, and right image borders (a quarter
of them on each side border, half on the bottom) and exist purely to assign
lane proposals to ground-truth lanes by start-point proximity.  Fast NMS lets
every higher-scored candidate suppress, whether or not that candidate itself
survives, so suppression is a single pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .curves import BSplineCurve, Curve, sample
from .distance import symmetric_distance

__all__ = [
    "ReferencePointSet",
    "Assignment",
    "ScoredCurve",
    "make_reference_points",
    "assign_labels",
    "fast_nms",
    "sequential_nms",
]


@dataclass(frozen=True)
class ReferencePointSet:
    """Fixed border points used for label assignment.

    points is (N_p, 2); border_of holds "left", "bottom", or "right" per point.
    """

    points: np.ndarray
    border_of: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "border_of", tuple(self.border_of))
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) != len(self.border_of):
            raise ValueError("points and border_of must align as (N_p, 2) and length N_p")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Assignment:
    """Top-k reference indices for one ground-truth lane, nearest first."""

    gt_index: int
    proposal_indices: tuple
    distances: tuple

    def __post_init__(self):
        if len(set(self.proposal_indices)) != len(self.proposal_indices):
            raise ValueError("proposal indices must be distinct")
        if any(b < a for a, b in zip(self.distances, self.distances[1:])):
            raise ValueError("distances must be non-decreasing")


@dataclass(frozen=True)
class ScoredCurve:
    """A predicted curve with its existence confidence."""

    curve: Curve
    confidence: float

    def __post_init__(self):
        if not np.isfinite(self.confidence):
            raise ValueError("confidence must be finite")


def make_reference_points(n_p: int, width: float, height: float) -> ReferencePointSet:
    """Uniformly spaced border reference points: N_p/4 left, N_p/2 bottom, N_p/4 right.

    Each border's points sit at half-spacing margins so the counts are exact.
    Index order: left border top-to-bottom, bottom border left-to-right, right
    border top-to-bottom.
    """
    if n_p <= 0 or n_p % 4 != 0:
        raise ValueError(f"N_p must be a positive multiple of 4, got {n_p}")
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    side = n_p // 4
    bottom = n_p // 2
    side_ys = (np.arange(side) + 0.5) * height / side
    bottom_xs = (np.arange(bottom) + 0.5) * width / bottom
    pts = np.concatenate([
        np.column_stack([np.zeros(side), side_ys]),
        np.column_stack([bottom_xs, np.full(bottom, float(height))]),
        np.column_stack([np.full(side, float(width)), side_ys]),
    ])
    borders = ("left",) * side + ("bottom",) * bottom + ("right",) * side
    return ReferencePointSet(points=pts, border_of=borders)


def assign_labels(gt_starts, refs: ReferencePointSet, k: int = 3) -> List[Assignment]:
    """Per ground-truth start point, the k nearest reference indices.

    Ties break toward the lower index.  The same reference may serve several
    ground truths.
    """
    if len(refs) == 0:
        raise ValueError("empty reference set")
    if not 1 <= k <= len(refs):
        raise ValueError(f"k must be in [1, {len(refs)}]")
    starts = np.asarray(gt_starts, dtype=float).reshape(-1, 2)
    out = []
    for gi, s in enumerate(starts):
        d = np.hypot(*(refs.points - s).T)
        order = np.argsort(d, kind="stable")[:k]
        out.append(Assignment(gt_index=gi,
                              proposal_indices=tuple(int(i) for i in order),
                              distances=tuple(float(d[i]) for i in order)))
    return out


def _nms_prep(candidates: Sequence[ScoredCurve], conf_threshold: float, n_dis: int):
    kept = [(i, c) for i, c in enumerate(candidates) if c.confidence >= conf_threshold]
    # canonical order: confidence descending, ties by original index
    kept.sort(key=lambda ic: (-ic[1].confidence, ic[0]))
    polys = [sample(c.curve, n_dis) for _, c in kept]
    return kept, polys


def fast_nms(candidates: Sequence[ScoredCurve], distance_threshold: float,
             conf_threshold: float = 0.4, n_dis: int = 300) -> List[int]:
    """Fast NMS over scored curves using the symmetric curve distance.

    A candidate is suppressed when any higher-scored candidate lies within the
    distance threshold, regardless of whether that candidate itself survives.
    Returns surviving original indices in score order.
    """
    if distance_threshold <= 0:
        raise ValueError("distance threshold must be positive")
    kept, polys = _nms_prep(candidates, conf_threshold, n_dis)
    survivors = []
    for j in range(len(kept)):
        suppressed = any(
            symmetric_distance(polys[i], polys[j]).d_symmetric < distance_threshold
            for i in range(j)
        )
        if not suppressed:
            survivors.append(kept[j][0])
    return survivors


def sequential_nms(candidates: Sequence[ScoredCurve], distance_threshold: float,
                   conf_threshold: float = 0.4, n_dis: int = 300) -> List[int]:
    """Classic greedy NMS: only surviving candidates suppress lower-scored ones."""
    if distance_threshold <= 0:
        raise ValueError("distance threshold must be positive")
    kept, polys = _nms_prep(candidates, conf_threshold, n_dis)
    survivor_pos: List[int] = []
    for j in range(len(kept)):
        suppressed = any(
            symmetric_distance(polys[i], polys[j]).d_symmetric < distance_threshold
            for i in survivor_pos
        )
        if not suppressed:
            survivor_pos.append(j)
    return [kept[j][0] for j in survivor_pos]
