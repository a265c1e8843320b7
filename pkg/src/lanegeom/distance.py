"""Point-to-curve and curve-to-curve distances over sampled polylines.

The directed distance from A to B is the mean, over A's sample points, of each
point's distance to the nearest line segment of B.  The symmetric distance is
the sum of both directions, which penalizes degenerate predictions (a curve
collapsed onto a point of the other still has a nonzero opposite direction).
Distances are normalized into an IoU-like score via an extended lane radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import as_points

__all__ = [
    "ExtendedRadius",
    "DistanceReport",
    "point_to_polyline",
    "nearest_segment_data",
    "directed_distance",
    "symmetric_distance",
    "normalize_distance",
    "radius_value",
]

DEFAULT_RADIUS = 9.0


@dataclass(frozen=True)
class ExtendedRadius:
    """Half-width by which a lane centerline is thickened, in pixels."""

    r: float = DEFAULT_RADIUS

    def __post_init__(self):
        if not (np.isfinite(self.r) and self.r > 0):
            raise ValueError("extended radius must be finite and positive")


def radius_value(r) -> float:
    """Accept an ExtendedRadius or a plain number."""
    if isinstance(r, ExtendedRadius):
        return float(r.r)
    r = float(r)
    if not (np.isfinite(r) and r > 0):
        raise ValueError("extended radius must be finite and positive")
    return r


@dataclass(frozen=True)
class DistanceReport:
    """Directed, symmetric, and normalized distances for one curve pair."""

    d_a_to_b: float
    d_b_to_a: float
    d_symmetric: float
    n_a_to_b: float
    n_b_to_a: float

    def to_dict(self) -> dict:
        return {
            "d_a_to_b": self.d_a_to_b,
            "d_b_to_a": self.d_b_to_a,
            "d_symmetric": self.d_symmetric,
            "n_a_to_b": self.n_a_to_b,
            "n_b_to_a": self.n_b_to_a,
        }


def nearest_segment_data(points, poly):
    """Nearest-segment decomposition of each point's distance to a polyline.

    Returns (distances, segment_indices, ts, closest) where segment k spans
    poly[k] .. poly[k+1], ts in [0, 1] locates the closest point on that
    segment, and ties resolve to the lowest segment index.  Zero-length
    segments are valid and contribute their endpoint distance.
    """
    P = as_points(points)
    V = as_points(poly)
    a = V[:-1]
    d = V[1:] - a
    len2 = np.einsum("ij,ij->i", d, d)
    safe_len2 = np.where(len2 > 0.0, len2, 1.0)
    # (N, M) projections of every point onto every segment, clamped to the segment
    diff = P[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nmj,mj->nm", diff, d) / safe_len2[None, :], 0.0, 1.0)
    t = np.where(len2[None, :] > 0.0, t, 0.0)
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist2 = np.einsum("nmj,nmj->nm", P[:, None, :] - closest, P[:, None, :] - closest)
    seg = np.argmin(dist2, axis=1)
    rows = np.arange(len(P))
    dists = np.sqrt(dist2[rows, seg])
    return dists, seg, t[rows, seg], closest[rows, seg]


def point_to_polyline(p, poly) -> float:
    """Distance from a point to the closest line segment of a polyline.

    Perpendicular distance when the foot of the perpendicular falls inside the
    segment, otherwise the nearer endpoint distance.
    """
    pts = np.asarray(p, dtype=float).reshape(1, 2)
    dists, _, _, _ = nearest_segment_data(pts, poly)
    return float(dists[0])


def directed_distance(a, b) -> float:
    """Mean over A's sample points of each point's distance to curve B."""
    dists, _, _, _ = nearest_segment_data(as_points(a), b)
    return float(dists.mean())


def normalize_distance(d: float, r=DEFAULT_RADIUS) -> float:
    """Map a non-negative pixel distance to the IoU-like score (2r - d)/(d + 2r).

    Strictly decreasing; 1 at d = 0, 0 at d = 2r, and approaching -1 as d grows.
    """
    d = float(d)
    if d < 0:
        raise ValueError("distance must be non-negative")
    r2 = 2.0 * radius_value(r)
    return (r2 - d) / (d + r2)


def symmetric_distance(a, b, r=DEFAULT_RADIUS) -> DistanceReport:
    """Both directed distances, their sum, and their normalized values."""
    d_ab = directed_distance(a, b)
    d_ba = directed_distance(b, a)
    return DistanceReport(
        d_a_to_b=d_ab,
        d_b_to_a=d_ba,
        d_symmetric=d_ab + d_ba,
        n_a_to_b=normalize_distance(d_ab, r),
        n_b_to_a=normalize_distance(d_ba, r),
    )
