"""Least-squares lane fitting and gradient-descent fitting over the loss suite.

Includes the locality comparison harness: fit the same initial lane with a
polynomial, a Bezier curve, and a B-spline, take one matched gradient step
toward a target lane whose lower half already coincides with the initial lane,
and measure how much each representation disturbs the coincident half.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .curves import (
    BezierCurve,
    BSplineCurve,
    Curve,
    Polyline,
    PolynomialCurve,
    bernstein_matrix,
    as_points,
    basis_matrix,
    make_clamped_uniform_knots,
    sample,
)
from .distance import DEFAULT_RADIUS
from .losses import (
    LossBreakdown,
    LossWeights,
    length_loss_with_point_grad,
    regression_loss_with_point_grad,
    start_point_loss_with_point_grad,
    total_loss,
)

__all__ = [
    "FitConfig",
    "FitReport",
    "FitError",
    "DescentConfig",
    "DescentStep",
    "DescentDiverged",
    "Fig1Scenario",
    "LocalityReport",
    "RepresentationResult",
    "chord_length_params",
    "fit_bspline_least_squares",
    "fit_bezier_least_squares",
    "fit_polynomial_least_squares",
    "fit_by_gradient_descent",
    "locality_experiment",
]


class FitError(ValueError):
    """A least-squares fit could not be carried out (underdetermined or rank-deficient)."""


class DescentDiverged(RuntimeError):
    """Gradient descent exceeded the divergence bound (10x the initial loss)."""

    def __init__(self, step: int, loss: float, initial_loss: float):
        self.step = step
        self.loss = loss
        self.initial_loss = initial_loss
        super().__init__(
            f"descent diverged at step {step}: loss {loss:.6g} exceeds "
            f"10x initial loss {initial_loss:.6g}; reduce the step size"
        )


@dataclass(frozen=True)
class FitConfig:
    """Configuration for least-squares ground-truth fitting."""

    n_control: int = 8
    degree: int = 3
    parameterization: str = "chord_length"  # or "uniform"

    def __post_init__(self):
        if self.n_control < self.degree + 1:
            raise ValueError("n_control must be at least degree+1")
        if self.parameterization not in ("chord_length", "uniform"):
            raise ValueError("parameterization must be 'chord_length' or 'uniform'")


@dataclass(frozen=True)
class FitReport:
    """A fitted curve with its per-point residuals against the input points."""

    curve: Curve
    rms_error: float
    max_error: float
    residuals: np.ndarray


def chord_length_params(points) -> np.ndarray:
    """Cumulative chord-length parameters normalized to [0, 1]."""
    pts = as_points(points)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    total = seg.sum()
    if total <= 0:
        raise FitError("cannot parameterize points with zero total chord length")
    t = np.concatenate([[0.0], np.cumsum(seg)]) / total
    t[-1] = 1.0
    return t


def _fit_params(pts: np.ndarray, parameterization: str) -> np.ndarray:
    if parameterization == "uniform":
        return np.arange(len(pts)) / (len(pts) - 1)
    return chord_length_params(pts)


def _lstsq_report(design: np.ndarray, pts: np.ndarray, n_unknowns: int):
    sol, _, rank, _ = np.linalg.lstsq(design, pts, rcond=None)
    if rank < n_unknowns:
        raise FitError(
            f"rank-deficient design matrix (rank {rank} < {n_unknowns}); "
            "parameter collisions in the input points"
        )
    resid = np.hypot(*(design @ sol - pts).T)
    return sol, resid


def fit_bspline_least_squares(points, cfg: FitConfig = FitConfig()) -> FitReport:
    """Fit a clamped quasi-uniform B-spline to ordered lane points.

    Solves the linear least-squares system on the basis matrix evaluated at
    chord-length (default) or uniform parameters.  Requires at least n_control
    points.
    """
    pts = as_points(points)
    if len(pts) < cfg.n_control:
        raise FitError(
            f"underdetermined fit: {len(pts)} points < {cfg.n_control} control points"
        )
    t = _fit_params(pts, cfg.parameterization)
    knots = make_clamped_uniform_knots(cfg.n_control - 1, cfg.degree)
    A = basis_matrix(knots, cfg.degree, t)
    ctrl, resid = _lstsq_report(A, pts, cfg.n_control)
    curve = BSplineCurve(degree=cfg.degree, control_points=ctrl, knots=knots)
    return FitReport(curve=curve, rms_error=float(np.sqrt(np.mean(resid**2))),
                     max_error=float(resid.max()), residuals=resid)


def fit_bezier_least_squares(points, n_control: int = 8,
                             parameterization: str = "chord_length") -> FitReport:
    """Fit a Bezier curve (degree n_control-1) by linear least squares."""
    pts = as_points(points)
    if len(pts) < n_control:
        raise FitError(
            f"underdetermined fit: {len(pts)} points < {n_control} control points"
        )
    t = _fit_params(pts, parameterization)
    B = bernstein_matrix(n_control - 1, t)
    ctrl, resid = _lstsq_report(B, pts, n_control)
    return FitReport(curve=BezierCurve(control_points=ctrl),
                     rms_error=float(np.sqrt(np.mean(resid**2))),
                     max_error=float(resid.max()), residuals=resid)


def fit_polynomial_least_squares(points, degree: int = 3) -> FitReport:
    """Fit x as a polynomial in y over the points' y-range.

    The regression runs on the y-range normalized to [0, 1] for conditioning;
    coefficients are converted back to raw image-y units.
    """
    pts = as_points(points)
    if len(pts) < degree + 1:
        raise FitError(f"underdetermined fit: {len(pts)} points < {degree + 1} coefficients")
    y0, y1 = float(pts[:, 1].min()), float(pts[:, 1].max())
    if not y0 < y1:
        raise FitError("polynomial fit needs a nonzero y-range")
    t = (pts[:, 1] - y0) / (y1 - y0)
    V = np.vander(t, degree + 1, increasing=True)
    coef_norm, _, rank, _ = np.linalg.lstsq(V, pts[:, 0], rcond=None)
    if rank < degree + 1:
        raise FitError("rank-deficient polynomial design matrix")
    resid = np.abs(V @ coef_norm - pts[:, 0])
    curve = PolynomialCurve(coefficients=_poly_norm_to_raw(coef_norm, y0, y1),
                            y_start=y0, y_end=y1)
    return FitReport(curve=curve, rms_error=float(np.sqrt(np.mean(resid**2))),
                     max_error=float(resid.max()), residuals=resid)


def _poly_norm_to_raw(coef_norm: np.ndarray, y0: float, y1: float) -> np.ndarray:
    """Coefficients over t = (y - y0)/(y1 - y0) rewritten as coefficients over y."""
    P = np.polynomial.Polynomial(coef_norm)
    raw = P(np.polynomial.Polynomial([-y0 / (y1 - y0), 1.0 / (y1 - y0)])).coef
    out = np.zeros(len(coef_norm))
    out[: len(raw)] = raw
    return out


def _poly_raw_to_norm(coef_raw: np.ndarray, y0: float, y1: float) -> np.ndarray:
    P = np.polynomial.Polynomial(coef_raw)
    norm = P(np.polynomial.Polynomial([y0, y1 - y0])).coef
    out = np.zeros(len(coef_raw))
    out[: len(norm)] = norm
    return out


# --- gradient descent over any representation's free parameters -------------


class _ParamSpace:
    """Maps a curve's free parameters to sample points and gradients back."""

    def __init__(self, curve: Curve, n_dis: int):
        us = np.arange(n_dis) / (n_dis - 1)
        self._template = curve
        if isinstance(curve, BSplineCurve):
            self._design = basis_matrix(curve.knots, curve.degree, us)
            self._kind = "bspline"
        elif isinstance(curve, BezierCurve):
            self._design = bernstein_matrix(len(curve.control_points) - 1, us)
            self._kind = "bezier"
        elif isinstance(curve, PolynomialCurve):
            k = len(curve.coefficients)
            self._design = np.vander(us, k, increasing=True)
            self._ys = curve.y_start + us * (curve.y_end - curve.y_start)
            self._kind = "polynomial"
        else:
            raise TypeError(f"cannot run descent on {type(curve).__name__}")

    def params(self, curve: Curve) -> np.ndarray:
        if self._kind == "polynomial":
            return _poly_raw_to_norm(curve.coefficients, curve.y_start, curve.y_end)
        return curve.control_points.copy()

    def curve(self, params: np.ndarray) -> Curve:
        t = self._template
        if self._kind == "bspline":
            return BSplineCurve(degree=t.degree, control_points=params, knots=t.knots)
        if self._kind == "bezier":
            return BezierCurve(control_points=params)
        return PolynomialCurve(coefficients=_poly_norm_to_raw(params, t.y_start, t.y_end),
                               y_start=t.y_start, y_end=t.y_end)

    def samples(self, params: np.ndarray) -> np.ndarray:
        if self._kind == "polynomial":
            return np.column_stack([self._design @ params, self._ys])
        return self._design @ params

    def param_grad(self, point_grad: np.ndarray) -> np.ndarray:
        if self._kind == "polynomial":
            return self._design.T @ point_grad[:, 0]
        return self._design.T @ point_grad


@dataclass(frozen=True)
class DescentConfig:
    """Gradient-descent settings: step size, step count, loss weights, sampling."""

    step_size: float
    steps: int
    weights: LossWeights = LossWeights()
    n_dis: int = 300
    radius: float = DEFAULT_RADIUS

    def __post_init__(self):
        if not (self.step_size > 0 and self.steps > 0 and self.n_dis >= 2):
            raise ValueError("step_size, steps, and n_dis must be positive")


@dataclass(frozen=True)
class DescentStep:
    curve: Curve
    losses: LossBreakdown


def _descent_losses(space: _ParamSpace, params: np.ndarray, target_pts: np.ndarray,
                    cfg: DescentConfig):
    """Loss breakdown at the given parameters plus the weighted point gradient."""
    S = space.samples(params)
    w = cfg.weights
    l_reg, g_reg = regression_loss_with_point_grad(target_pts, S, cfg.radius)
    l_len, g_len = length_loss_with_point_grad(target_pts, S)
    l_start, g_start = start_point_loss_with_point_grad(target_pts[0], S)
    point_grad = w.lambda_reg * g_reg + w.lambda_length * g_len + w.lambda_start * g_start
    losses = total_loss(l_reg, l_len, l_start, 0.0, w)
    return losses, space.param_grad(point_grad), S


def fit_by_gradient_descent(init: Curve, target, cfg: DescentConfig) -> List[DescentStep]:
    """Descend the weighted loss from an initial curve toward a target polyline.

    The free parameters are the control points (B-spline, Bezier) or the
    polynomial coefficients over the normalized y-range.  The target polyline
    is expected start-first (bottom-anchored) for the start-point term.
    Returns the trajectory including the initial state; raises DescentDiverged
    if the total loss exceeds 10x its initial value.
    """
    target_pts = as_points(target)
    space = _ParamSpace(init, cfg.n_dis)
    params = space.params(init)
    losses, grad, _ = _descent_losses(space, params, target_pts, cfg)
    trajectory = [DescentStep(curve=init, losses=losses)]
    initial = losses.l_total
    for step in range(1, cfg.steps + 1):
        params = params - cfg.step_size * grad
        losses, grad, _ = _descent_losses(space, params, target_pts, cfg)
        trajectory.append(DescentStep(curve=space.curve(params), losses=losses))
        if initial > 0 and losses.l_total > 10.0 * initial:
            raise DescentDiverged(step, losses.l_total, initial)
    return trajectory


# --- the locality comparison harness -----------------------------------------

_SCENARIO_YS = np.arange(590.0, 170.0 - 1, -60.0)  # 8 rows, bottom to top
_SCENARIO_X = 820.0
_SCENARIO_SWING = (35.0, -15.0)  # S-shaped deviations on the offset side


@dataclass(frozen=True)
class Fig1Scenario:
    """A target lane and an initial lane that coincide on one half.

    The lane is built from 8 cubic B-spline control points: the first six are
    collinear (so the coincident half is exactly straight) and the last two
    swing sideways into an S-shaped tip.  The initial lane shifts those two
    tip control points further sideways, so it matches the target exactly over
    the first 60% of the parameter range and is offset_px off at the lane tip.
    """

    offset_px: float = 20.0
    offset_at: str = "top"  # or "bottom"
    n_points: int = 200
    n_control: int = 8
    degree: int = 3
    poly_degree: int = 3
    n_dis: int = 300
    radius: float = DEFAULT_RADIUS
    step_size: Optional[float] = None  # None: largest step all representations tolerate
    steps: int = 8

    def __post_init__(self):
        if self.offset_at not in ("top", "bottom"):
            raise ValueError("offset_at must be 'top' or 'bottom'")
        if self.offset_px < 0:
            raise ValueError("offset_px must be non-negative")
        if self.n_points < 16 or self.n_dis < 2 or self.steps < 1:
            raise ValueError("scenario sizes out of range")

    def control_points(self) -> Tuple[np.ndarray, np.ndarray]:
        """(target, init) control points, ordered bottom-first."""
        target = np.column_stack([np.full(8, _SCENARIO_X), _SCENARIO_YS])
        if self.offset_at == "top":
            swing_idx = [6, 7]
        else:
            swing_idx = [1, 0]
        target[swing_idx, 0] += _SCENARIO_SWING
        init = target.copy()
        init[swing_idx, 0] += self.offset_px
        return target, init

    def polylines(self) -> Tuple[Polyline, Polyline]:
        """(target, init) sample polylines of the scenario lanes."""
        target_cps, init_cps = self.control_points()
        target = BSplineCurve.from_control_points(target_cps, degree=3)
        init = BSplineCurve.from_control_points(init_cps, degree=3)
        return sample(target, self.n_points), sample(init, self.n_points)


@dataclass
class RepresentationResult:
    """Per-representation outcome of the locality experiment."""

    name: str
    fit_rms: float
    losses: List[LossBreakdown]
    coincident_disp: List[float]  # per step, vs the pre-descent samples
    offset_disp: List[float]
    samples_before: np.ndarray
    samples_after_first: np.ndarray

    @property
    def first_step_coincident_disp(self) -> float:
        return self.coincident_disp[0]

    @property
    def first_step_offset_disp(self) -> float:
        return self.offset_disp[0]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "fit_rms": self.fit_rms,
            "loss_per_step": [l.to_dict() for l in self.losses],
            "coincident_displacement_per_step": self.coincident_disp,
            "offset_displacement_per_step": self.offset_disp,
        }


@dataclass
class LocalityReport:
    scenario: Fig1Scenario
    step_size: float
    representations: dict
    target_polyline: np.ndarray = field(repr=False, default=None)
    init_polyline: np.ndarray = field(repr=False, default=None)

    def headline(self) -> dict:
        """First-step coincident-half displacements and their ordering."""
        disp = {name: rep.first_step_coincident_disp
                for name, rep in self.representations.items()}
        bsp, bez, poly = disp["bspline"], disp["bezier"], disp["polynomial"]
        return {
            "coincident_displacement": disp,
            "bspline_less_than_bezier": bsp < bez,
            "bspline_less_than_polynomial": bsp < poly,
            "bspline_to_bezier_ratio": bsp / bez if bez > 0 else float("inf"),
            "bspline_to_polynomial_ratio": bsp / poly if poly > 0 else float("inf"),
        }

    def to_dict(self) -> dict:
        return {
            "scenario": {
                "offset_px": self.scenario.offset_px,
                "offset_at": self.scenario.offset_at,
                "n_points": self.scenario.n_points,
                "n_control": self.scenario.n_control,
                "degree": self.scenario.degree,
                "poly_degree": self.scenario.poly_degree,
                "n_dis": self.scenario.n_dis,
                "radius": self.scenario.radius,
                "steps": self.scenario.steps,
            },
            "step_size": self.step_size,
            "headline": self.headline(),
            "representations": {k: v.to_dict() for k, v in self.representations.items()},
        }


def _fit_representations(init_poly: Polyline, sc: Fig1Scenario) -> dict:
    # uniform parameters match the uniform-u sampling used to build the scenario,
    # so the B-spline fit reproduces the initial lane exactly
    return {
        "polynomial": fit_polynomial_least_squares(init_poly, sc.poly_degree),
        "bezier": fit_bezier_least_squares(init_poly, sc.n_control, "uniform"),
        "bspline": fit_bspline_least_squares(
            init_poly, FitConfig(n_control=sc.n_control, degree=sc.degree,
                                 parameterization="uniform")),
    }


def _experiment_weights() -> LossWeights:
    # regression term only: isolates how each representation propagates offsets
    return LossWeights(lambda_reg=1.0, lambda_length=0.0, lambda_start=0.0, lambda_cls=0.0)


def _match_step_size(fits: dict, target_pts: np.ndarray, sc: Fig1Scenario) -> float:
    """Largest power-of-two step for which every representation's loss drops.

    Representations whose gradient already vanishes count as tolerating any
    step.  One extra halving is applied as a stability margin.
    """
    cfg0 = DescentConfig(step_size=1.0, steps=1, weights=_experiment_weights(),
                         n_dis=sc.n_dis, radius=sc.radius)
    states = {}
    for name, fit in fits.items():
        space = _ParamSpace(fit.curve, sc.n_dis)
        params = space.params(fit.curve)
        losses, grad, _ = _descent_losses(space, params, target_pts, cfg0)
        states[name] = (space, params, losses.l_total, grad)
    eta = 4096.0
    for _ in range(48):
        ok = True
        for space, params, loss0, grad in states.values():
            if np.max(np.abs(grad)) == 0.0:
                continue
            trial, _, _ = _descent_losses(space, params - eta * grad, target_pts, cfg0)
            if not trial.l_total < loss0:
                ok = False
                break
        if ok:
            return eta / 2.0
        eta /= 2.0
    raise FitError("no stable matched step size found for the scenario")


def locality_experiment(scenario: Fig1Scenario = Fig1Scenario()) -> LocalityReport:
    """Compare one-step locality of polynomial, Bezier, and B-spline lanes.

    Fits all three representations to the scenario's initial lane, takes
    matched gradient steps toward the target, and measures the mean sample
    displacement on the coincident half versus the offset half.
    """
    target_poly, init_poly = scenario.polylines()
    target_pts = target_poly.points
    fits = _fit_representations(init_poly, scenario)
    step_size = (scenario.step_size if scenario.step_size is not None
                 else _match_step_size(fits, target_pts, scenario))
    ys = init_poly.points[:, 1]
    y_mid = 0.5 * (ys.min() + ys.max())

    cfg = DescentConfig(step_size=step_size, steps=scenario.steps,
                        weights=_experiment_weights(), n_dis=scenario.n_dis,
                        radius=scenario.radius)
    reps = {}
    for name, fit in fits.items():
        trajectory = fit_by_gradient_descent(fit.curve, target_poly, cfg)
        space = _ParamSpace(fit.curve, scenario.n_dis)
        before = space.samples(space.params(trajectory[0].curve))
        if scenario.offset_at == "top":
            coincident = before[:, 1] > y_mid
        else:
            coincident = before[:, 1] < y_mid
        coincident_disp, offset_disp = [], []
        after_first = None
        for step in trajectory[1:]:
            now = space.samples(space.params(step.curve))
            disp = np.hypot(*(now - before).T)
            coincident_disp.append(float(disp[coincident].mean()))
            offset_disp.append(float(disp[~coincident].mean()))
            if after_first is None:
                after_first = now
        reps[name] = RepresentationResult(
            name=name,
            fit_rms=fit.rms_error,
            losses=[s.losses for s in trajectory],
            coincident_disp=coincident_disp,
            offset_disp=offset_disp,
            samples_before=before,
            samples_after_first=after_first,
        )
    return LocalityReport(scenario=scenario, step_size=step_size,
                          representations=reps,
                          target_polyline=target_poly.points,
                          init_polyline=init_poly.points)
