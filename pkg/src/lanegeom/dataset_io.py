"""Tusimple/CULane annotation parsing, ground-truth fitting, and serialization.

Lane points are canonicalized bottom-to-top (start point first, at the larger
image y) so fitted curves start at their first control point.  All geometry
stays in source-image pixel coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .curves import (
    BezierCurve,
    BSplineCurve,
    Curve,
    KnotVector,
    Polyline,
    PolynomialCurve,
    as_points,
)
from .fitting import FitConfig, fit_bspline_least_squares

__all__ = [
    "LaneAnnotation",
    "Frame",
    "TUSIMPLE_IMAGE_SIZE",
    "CULANE_IMAGE_SIZE",
    "canonicalize_points",
    "parse_tusimple_line",
    "write_tusimple_line",
    "polyline_to_row_xs",
    "parse_culane_lines",
    "write_culane_lines",
    "build_ground_truth",
    "curve_to_dict",
    "curve_from_dict",
    "polyline_to_dict",
    "polyline_from_dict",
    "geometry_from_dict",
]

TUSIMPLE_IMAGE_SIZE = (1280, 720)  # (W, H)
CULANE_IMAGE_SIZE = (1640, 590)
ABSENT_X = -2.0


@dataclass(frozen=True)
class LaneAnnotation:
    """One labeled lane: raw dataset points plus an optional fitted curve."""

    raw_points: Polyline
    fitted: Optional[BSplineCurve] = None
    source_file: str = ""
    fit_rms: Optional[float] = None
    reduced_fit: bool = False


@dataclass(frozen=True)
class Frame:
    """All lanes of one image, with the source image size in pixels."""

    image_size: Tuple[int, int]  # (W, H)
    lanes: Tuple[LaneAnnotation, ...]
    scenario_tag: Optional[str] = None
    h_samples: Optional[Tuple[float, ...]] = None
    raw_file: Optional[str] = None


def canonicalize_points(points, image_size: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Clip to the image, order bottom-to-top (decreasing y), drop repeats.

    Idempotent; the first point afterwards is the lane's start point.
    """
    pts = as_points(points).copy()
    if image_size is not None:
        w, h = image_size
        pts[:, 0] = np.clip(pts[:, 0], 0.0, float(w))
        pts[:, 1] = np.clip(pts[:, 1], 0.0, float(h))
    order = np.argsort(-pts[:, 1], kind="stable")
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return pts[keep]


def parse_tusimple_line(json_text: str) -> Frame:
    """Parse one Tusimple label line into a Frame.

    Lanes are x-lists over shared h_samples rows with -2 marking absent rows;
    lanes with fewer than two visible points are dropped.
    """
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed Tusimple JSON: {e}") from e
    for key in ("lanes", "h_samples", "raw_file"):
        if key not in obj:
            raise ValueError(f"Tusimple record missing key {key!r}")
    h_samples = [float(h) for h in obj["h_samples"]]
    lanes = []
    for xs in obj["lanes"]:
        if len(xs) != len(h_samples):
            raise ValueError("lane length does not match h_samples length")
        pts = np.array([(float(x), h) for x, h in zip(xs, h_samples) if x != ABSENT_X])
        if len(pts) < 2:
            continue
        lanes.append(LaneAnnotation(
            raw_points=Polyline(canonicalize_points(pts, TUSIMPLE_IMAGE_SIZE)),
            source_file=str(obj["raw_file"]),
        ))
    return Frame(image_size=TUSIMPLE_IMAGE_SIZE, lanes=tuple(lanes),
                 h_samples=tuple(h_samples), raw_file=str(obj["raw_file"]))


def polyline_to_row_xs(points, h_samples: Sequence[float]) -> List[float]:
    """The lane's x at each h_samples row, -2 where the lane does not reach.

    Rows that coincide exactly with a lane point take that point's x; other
    rows inside the lane's y-range are linearly interpolated.
    """
    pts = as_points(points)
    order = np.argsort(pts[:, 1], kind="stable")
    ys, xs = pts[order, 1], pts[order, 0]
    exact = {y: x for y, x in zip(ys, xs)}
    out = []
    for h in h_samples:
        h = float(h)
        if h in exact:
            out.append(float(exact[h]))
        elif ys[0] <= h <= ys[-1]:
            out.append(float(np.interp(h, ys, xs)))
        else:
            out.append(ABSENT_X)
    return out


def write_tusimple_line(frame: Frame, run_time: Optional[float] = None) -> str:
    """Serialize a frame's lanes to one Tusimple submission JSON line."""
    if frame.h_samples is None:
        raise ValueError("frame has no h_samples to serialize against")
    lanes = [polyline_to_row_xs(lane.raw_points, frame.h_samples)
             for lane in frame.lanes]
    obj = {"lanes": lanes, "h_samples": list(frame.h_samples),
           "raw_file": frame.raw_file or ""}
    if run_time is not None:
        obj["run_time"] = run_time
    return json.dumps(obj)


def parse_culane_lines(text: str) -> List[Polyline]:
    """Parse CULane-style lane lines: one lane per line as "x y x y ..." pairs."""
    lanes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) % 2 != 0:
            raise ValueError(f"line {lineno}: odd token count {len(tokens)}")
        try:
            vals = [float(t) for t in tokens]
        except ValueError as e:
            raise ValueError(f"line {lineno}: non-numeric token") from e
        pts = np.array(vals).reshape(-1, 2)
        if len(pts) < 2:
            continue
        lanes.append(Polyline(pts))
    return lanes


def write_culane_lines(lanes: Sequence) -> str:
    """Serialize lanes to CULane-style text, one lane per line."""
    rows = []
    for lane in lanes:
        pts = as_points(lane)
        rows.append(" ".join(repr(float(v)) for v in pts.ravel()))
    return "\n".join(rows) + ("\n" if rows else "")


def build_ground_truth(frame: Frame, cfg: FitConfig = FitConfig()) -> Frame:
    """Fit every lane with a B-spline and return the frame with fits attached.

    Lanes with fewer points than control points get a reduced fit (fewer
    control points, degree capped at the interpolating minimum) and are
    flagged; raw points are never modified.
    """
    lanes = []
    for lane in frame.lanes:
        pts = lane.raw_points.points
        n_ctrl = min(cfg.n_control, len(pts))
        degree = min(cfg.degree, n_ctrl - 1)
        reduced = (n_ctrl != cfg.n_control) or (degree != cfg.degree)
        report = fit_bspline_least_squares(
            pts, FitConfig(n_control=n_ctrl, degree=degree,
                           parameterization=cfg.parameterization))
        lanes.append(replace(lane, fitted=report.curve,
                             fit_rms=report.rms_error, reduced_fit=reduced))
    return replace(frame, lanes=tuple(lanes))


# --- JSON geometry serialization ---------------------------------------------


def curve_to_dict(curve: Curve) -> dict:
    """JSON-safe dict for any curve kind; round trips at full double precision."""
    if isinstance(curve, BSplineCurve):
        return {
            "degree": curve.degree,
            "control_points": curve.control_points.tolist(),
            "knots": curve.knots.values.tolist(),
        }
    if isinstance(curve, BezierCurve):
        return {"control_points": curve.control_points.tolist()}
    if isinstance(curve, PolynomialCurve):
        return {"coefficients": curve.coefficients.tolist(),
                "y_start": curve.y_start, "y_end": curve.y_end}
    raise TypeError(f"cannot serialize {type(curve).__name__}")


def curve_from_dict(obj: dict) -> Curve:
    if "knots" in obj:
        return BSplineCurve(
            degree=int(obj["degree"]),
            control_points=np.asarray(obj["control_points"], dtype=float),
            knots=KnotVector(values=np.asarray(obj["knots"], dtype=float),
                             degree=int(obj["degree"])),
        )
    if "coefficients" in obj:
        return PolynomialCurve(coefficients=np.asarray(obj["coefficients"], dtype=float),
                               y_start=float(obj["y_start"]), y_end=float(obj["y_end"]))
    if "control_points" in obj:
        return BezierCurve(control_points=np.asarray(obj["control_points"], dtype=float))
    raise ValueError("object is not a recognized curve")


def polyline_to_dict(poly) -> dict:
    return {"points": as_points(poly).tolist()}


def polyline_from_dict(obj: dict) -> Polyline:
    return Polyline(np.asarray(obj["points"], dtype=float))


def geometry_from_dict(obj: dict):
    """A curve or polyline from its JSON dict, whichever the keys describe."""
    if "points" in obj:
        return polyline_from_dict(obj)
    return curve_from_dict(obj)
