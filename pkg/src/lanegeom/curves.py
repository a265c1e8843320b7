"""Clamped quasi-uniform B-spline curves plus Bezier/polynomial comparison curves.

All curves live in 2-D pixel coordinates and are parameterized over [0, 1].
Curves are immutable value objects; every operation here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

__all__ = [
    "Point2",
    "KnotVector",
    "BSplineCurve",
    "BezierCurve",
    "PolynomialCurve",
    "Polyline",
    "Curve",
    "make_clamped_uniform_knots",
    "basis",
    "basis_matrix",
    "bernstein_matrix",
    "evaluate",
    "evaluate_bezier",
    "evaluate_polynomial",
    "sample",
    "curve_length",
    "as_points",
]

N_DIS_DEFAULT = 300


class Point2(NamedTuple):
    """A 2-D point in pixel coordinates."""

    x: float
    y: float


def as_points(obj) -> np.ndarray:
    """Coerce a Polyline, array, or sequence of pairs into an (N, 2) float array."""
    if isinstance(obj, Polyline):
        return obj.points
    pts = np.asarray(obj, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (N, 2) points, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class KnotVector:
    """Non-decreasing knot values on [0, 1] with clamped, quasi-uniform structure.

    The first and last degree+1 values are exactly 0 and 1; interior knots are
    uniformly spaced.
    """

    values: np.ndarray
    degree: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        p = self.degree
        if p < 0:
            raise ValueError("degree must be non-negative")
        if values.ndim != 1 or len(values) < 2 * (p + 1):
            raise ValueError("knot vector too short for its degree")
        if np.any(np.diff(values) < 0):
            raise ValueError("knot values must be non-decreasing")
        if np.any(values[: p + 1] != 0.0) or np.any(values[-(p + 1):] != 1.0):
            raise ValueError("knot vector must be clamped to [0, 1]")
        interior = values[p + 1 : len(values) - p - 1]
        if interior.size:
            expected = np.arange(1, interior.size + 1) / (interior.size + 1)
            if np.max(np.abs(interior - expected)) > 1e-9:
                raise ValueError("interior knots must be uniformly spaced")

    def __len__(self) -> int:
        return len(self.values)


def make_clamped_uniform_knots(n: int, p: int) -> KnotVector:
    """Build the clamped quasi-uniform knot vector for n+1 control points, degree p.

    Interior knot j (1-based, out of n-p) sits at j/(n-p+1).  Requires n >= p >= 1;
    fewer control points than degree+1 leaves the curve underdetermined.
    """
    if p < 1:
        raise ValueError("degree must be at least 1")
    if n < p:
        raise ValueError(f"need at least degree+1 control points (n={n} < p={p})")
    interior = np.arange(1, n - p + 1) / (n - p + 1)
    values = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return KnotVector(values=values, degree=p)


@dataclass(frozen=True)
class BSplineCurve:
    """Clamped quasi-uniform B-spline of degree >= 1 over 2-D control points."""

    degree: int
    control_points: np.ndarray
    knots: KnotVector

    def __post_init__(self):
        cps = np.asarray(self.control_points, dtype=float)
        object.__setattr__(self, "control_points", cps)
        if cps.ndim != 2 or cps.shape[1] != 2:
            raise ValueError("control_points must have shape (n+1, 2)")
        if not np.all(np.isfinite(cps)):
            raise ValueError("control points must be finite")
        if self.degree < 1:
            raise ValueError("degree must be at least 1")
        if len(cps) < self.degree + 1:
            raise ValueError("need at least degree+1 control points")
        if self.knots.degree != self.degree:
            raise ValueError("knot vector degree mismatch")
        if len(self.knots) != len(cps) + self.degree + 1:
            raise ValueError("knot count must equal n + p + 2")

    @classmethod
    def from_control_points(cls, control_points, degree: int = 3) -> "BSplineCurve":
        cps = np.asarray(control_points, dtype=float)
        knots = make_clamped_uniform_knots(len(cps) - 1, degree)
        return cls(degree=degree, control_points=cps, knots=knots)


@dataclass(frozen=True)
class BezierCurve:
    """Bezier curve (Bernstein basis) over 2-D control points."""

    control_points: np.ndarray

    def __post_init__(self):
        cps = np.asarray(self.control_points, dtype=float)
        object.__setattr__(self, "control_points", cps)
        if cps.ndim != 2 or cps.shape[1] != 2 or len(cps) < 2:
            raise ValueError("Bezier curve needs at least 2 control points of shape (k, 2)")
        if not np.all(np.isfinite(cps)):
            raise ValueError("control points must be finite")


@dataclass(frozen=True)
class PolynomialCurve:
    """x as a polynomial in image y, traversed from y_start to y_end.

    coefficients[k] multiplies y**k.
    """

    coefficients: np.ndarray
    y_start: float
    y_end: float

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", coeffs)
        if coeffs.size < 1 or not np.all(np.isfinite(coeffs)):
            raise ValueError("need at least one finite coefficient")
        if not (self.y_start < self.y_end):
            raise ValueError("y_start must be < y_end")


Curve = Union[BSplineCurve, BezierCurve, PolynomialCurve]


@dataclass(frozen=True)
class Polyline:
    """Ordered 2-D sample points in pixel units."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("polyline needs at least 2 points of shape (N, 2)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("polyline points must be finite")

    def __len__(self) -> int:
        return len(self.points)


def _check_u(u: float) -> float:
    u = float(u)
    if not (0.0 <= u <= 1.0):
        raise ValueError(f"parameter u must lie in [0, 1], got {u}")
    return u


def basis(i: int, p: int, u: float, knots: KnotVector) -> float:
    """Evaluate the B-spline basis function N_{i,p}(u) by the Cox-de Boor recursion.

    0/0 terms are defined as 0.  The half-open degree-0 spans are closed on the
    right at u = 1 so the final basis function reaches 1 there.
    """
    u = _check_u(u)
    t = knots.values
    n = len(t) - p - 2
    if not 0 <= i <= n:
        raise IndexError(f"basis index {i} out of range [0, {n}]")
    return _cox_de_boor(t, i, p, u)


def _cox_de_boor(t: np.ndarray, i: int, p: int, u: float) -> float:
    if p == 0:
        if t[i] <= u < t[i + 1]:
            return 1.0
        # closed right end: the last nonempty span owns u = 1
        if u == t[-1] and t[i] < t[i + 1] and t[i + 1] == t[-1]:
            return 1.0
        return 0.0
    left_den = t[i + p] - t[i]
    right_den = t[i + p + 1] - t[i + 1]
    out = 0.0
    if left_den > 0.0:
        out += (u - t[i]) / left_den * _cox_de_boor(t, i, p - 1, u)
    if right_den > 0.0:
        out += (t[i + p + 1] - u) / right_den * _cox_de_boor(t, i + 1, p - 1, u)
    return out


def basis_matrix(knots: KnotVector, degree: int, us) -> np.ndarray:
    """All basis functions evaluated at an array of parameters.

    Returns an array of shape (len(us), n+1) whose rows sum to 1.
    """
    t = knots.values
    us = np.atleast_1d(np.asarray(us, dtype=float))
    if us.size and (us.min() < 0.0 or us.max() > 1.0):
        raise ValueError("parameters must lie in [0, 1]")
    m1 = len(t)
    N = np.zeros((us.size, m1 - 1))
    for i in range(m1 - 1):
        span = (t[i] <= us) & (us < t[i + 1])
        if t[i] < t[i + 1] and t[i + 1] == t[-1]:
            span = span | (us == t[-1])
        N[:, i] = span
    for d in range(1, degree + 1):
        prev = N
        N = np.zeros((us.size, m1 - 1 - d))
        for i in range(m1 - 1 - d):
            left_den = t[i + d] - t[i]
            right_den = t[i + d + 1] - t[i + 1]
            if left_den > 0.0:
                N[:, i] += (us - t[i]) / left_den * prev[:, i]
            if right_den > 0.0:
                N[:, i] += (t[i + d + 1] - us) / right_den * prev[:, i + 1]
    return N


def evaluate(curve: BSplineCurve, u: float) -> Point2:
    """Point on a B-spline curve: the basis-weighted sum of control points."""
    u = _check_u(u)
    row = basis_matrix(curve.knots, curve.degree, np.array([u]))[0]
    x, y = row @ curve.control_points
    return Point2(float(x), float(y))


def bernstein_matrix(k: int, us: np.ndarray) -> np.ndarray:
    us = np.atleast_1d(np.asarray(us, dtype=float))
    B = np.empty((us.size, k + 1))
    for i in range(k + 1):
        B[:, i] = math.comb(k, i) * us**i * (1.0 - us) ** (k - i)
    return B


def evaluate_bezier(curve: BezierCurve, u: float) -> Point2:
    """Point on a Bezier curve via the Bernstein-basis weighted sum."""
    u = _check_u(u)
    k = len(curve.control_points) - 1
    row = bernstein_matrix(k, np.array([u]))[0]
    x, y = row @ curve.control_points
    return Point2(float(x), float(y))


def evaluate_polynomial(curve: PolynomialCurve, t: float) -> Point2:
    """Point on a polynomial curve; t maps linearly onto [y_start, y_end]."""
    t = _check_u(t)
    y = curve.y_start + t * (curve.y_end - curve.y_start)
    x = np.polynomial.polynomial.polyval(y, curve.coefficients)
    return Point2(float(x), float(y))


def _sample_points(curve: Curve, us: np.ndarray) -> np.ndarray:
    if isinstance(curve, BSplineCurve):
        return basis_matrix(curve.knots, curve.degree, us) @ curve.control_points
    if isinstance(curve, BezierCurve):
        k = len(curve.control_points) - 1
        return bernstein_matrix(k, us) @ curve.control_points
    if isinstance(curve, PolynomialCurve):
        ys = curve.y_start + us * (curve.y_end - curve.y_start)
        xs = np.polynomial.polynomial.polyval(ys, curve.coefficients)
        return np.column_stack([xs, ys])
    raise TypeError(f"cannot sample object of type {type(curve).__name__}")


def sample(curve: Curve, n: int = N_DIS_DEFAULT) -> Polyline:
    """Sample a curve at n parameters equally spaced over [0, 1]."""
    if n < 2:
        raise ValueError("need at least 2 sample points")
    us = np.arange(n) / (n - 1)
    return Polyline(points=_sample_points(curve, us))


def curve_length(poly) -> float:
    """Total length of a polyline: the sum of its segment lengths."""
    pts = as_points(poly)
    return float(np.sum(np.hypot(*(np.diff(pts, axis=0).T))))
