"""Distance-aware worst-case error bounds for B-spline Kolmogorov-Arnold networks."""

from .baselines import EnsembleModel, GpModel, ensemble_predict, ensemble_train, gp_fit, gp_predict
from .bound import (
    BoundReport,
    DarekBounder,
    LipschitzBudget,
    darek_query,
    divide_errors,
    divide_lipschitz,
    interp_bound,
    knot_error_bound,
    layer_knot_images,
    multi_layer_bound,
    two_layer_bound,
)
from .errors import (
    DarekNumericalError,
    DarekValidationError,
    DegenerateImagesError,
    DivergenceError,
    DuplicateKnotError,
    InsufficientKnotsError,
    ScanFormatError,
)
from .kan import KanLayer, KanNetwork, TrainConfig, forward, init_network, train
from .poly import NewtonPoly, divided_differences, locate_segment, newton_eval, newton_fit
from .spline import ExtendedKnotVector, Spline1D, basis_eval, spline_eval, uniform_knots

__version__ = "0.1.0"

__all__ = [
    "EnsembleModel",
    "GpModel",
    "ensemble_predict",
    "ensemble_train",
    "gp_fit",
    "gp_predict",
    "BoundReport",
    "DarekBounder",
    "LipschitzBudget",
    "darek_query",
    "divide_errors",
    "divide_lipschitz",
    "interp_bound",
    "knot_error_bound",
    "layer_knot_images",
    "multi_layer_bound",
    "two_layer_bound",
    "DarekNumericalError",
    "DarekValidationError",
    "DegenerateImagesError",
    "DivergenceError",
    "DuplicateKnotError",
    "InsufficientKnotsError",
    "ScanFormatError",
    "KanLayer",
    "KanNetwork",
    "TrainConfig",
    "forward",
    "init_network",
    "train",
    "NewtonPoly",
    "divided_differences",
    "locate_segment",
    "newton_eval",
    "newton_fit",
    "ExtendedKnotVector",
    "Spline1D",
    "basis_eval",
    "spline_eval",
    "uniform_knots",
]
