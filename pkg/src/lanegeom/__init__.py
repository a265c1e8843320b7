"""lanegeom: curve-geometry toolkit for lane detection.

B-spline lane representation, bidirectional curve distance, loss suite,
least-squares and gradient-descent fitting, label assignment, fast NMS,
and CULane/Tusimple-style evaluation metrics.
"""

from .curves import (
    BSplineCurve,
    BezierCurve,
    KnotVector,
    Point2,
    Polyline,
    PolynomialCurve,
    basis,
    basis_matrix,
    curve_length,
    evaluate,
    evaluate_bezier,
    evaluate_polynomial,
    make_clamped_uniform_knots,
    sample,
)
from .distance import (
    DistanceReport,
    ExtendedRadius,
    directed_distance,
    normalize_distance,
    point_to_polyline,
    symmetric_distance,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    focal_cls_loss,
    length_loss,
    regression_loss,
    regression_loss_gradient,
    start_point_loss,
    total_loss,
)
from .fitting import (
    DescentConfig,
    DescentDiverged,
    Fig1Scenario,
    FitConfig,
    FitError,
    FitReport,
    fit_bspline_least_squares,
    fit_by_gradient_descent,
    locality_experiment,
)
from .assignment import (
    Assignment,
    ReferencePointSet,
    ScoredCurve,
    assign_labels,
    fast_nms,
    make_reference_points,
)
from .metrics import (
    EvalResult,
    TusimpleResult,
    lane_iou,
    match_and_score,
    tusimple_accuracy,
)
from .dataset_io import (
    Frame,
    LaneAnnotation,
    build_ground_truth,
    parse_culane_lines,
    parse_tusimple_line,
)

__version__ = "0.1.0"
