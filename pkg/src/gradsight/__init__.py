"""
gradsight
~~~~~~~~~
Green's function convolution (GFC) for Laplacian solving and gradient-field
integration, the gradient integration and sum (GIS) layer, and saliency
evaluation metrics.
"""

from .api import GradSight
from .layers.gis import GisLayer, gis_adjoint, gis_forward, gis_timing_bench
from .metrics.saliency import (
    auc,
    cross_entropy,
    evaluate_all,
    evaluate_batch,
    f_measure,
    mae,
    max_precision,
    mean_pr,
    pr_curve,
    rmse,
)
from .models import (
    ChannelLayout,
    FeatureBatch,
    GisConfig,
    GroundTruth,
    MetricReport,
    NoiseSpec,
    PRCurve,
    ScalarField,
    ValidMask,
    VectorField,
)
from .perturbation import darken, salt_pepper
from .solver.gfc import integrate_gradient, solve_laplacian
from .solver.green import GreenOperator, GreenOperatorCache, build_green_operator
from .solver.stencils import divergence, forward_gradient, image_laplacian
from .utils.geometry import crop_pad, zero_pad
from .utils.image import load_image, save_image

__all__ = [
    "GradSight",
    "GisLayer", "gis_forward", "gis_adjoint", "gis_timing_bench",
    "pr_curve", "f_measure", "max_precision", "mean_pr", "auc",
    "mae", "rmse", "cross_entropy", "evaluate_all", "evaluate_batch",
    "ChannelLayout", "FeatureBatch", "GisConfig", "GroundTruth", "MetricReport",
    "NoiseSpec", "PRCurve", "ScalarField", "ValidMask", "VectorField",
    "salt_pepper", "darken",
    "solve_laplacian", "integrate_gradient",
    "GreenOperator", "GreenOperatorCache", "build_green_operator",
    "image_laplacian", "divergence", "forward_gradient",
    "zero_pad", "crop_pad",
    "load_image", "save_image",
]
