"""
gradsight.solver.gfc
~~~~~~~~~~~~~~~~~~~~
Green's function convolution (GFC): solve a Laplacian by a spectral
convolution and integrate a (possibly non-conservative) gradient field.

solve_laplacian:
  1. zero-pad the Laplacian by ``margin`` pixels
  2. fetch the GreenOperator of the padded size
  3. multiply spectra, inverse transform, keep the real part
  4. subtract c = mean of the result over the padded band
  5. crop the margin

With ``margin=0`` the solve is purely circular and mean-free (no c step).
The ``*_adjoint`` functions are the exact transposes of the linear maps above.
"""

from typing import Optional

import numpy as np
from loguru import logger

from ..errors import FieldValidationError
from ..models import ScalarField, VectorField
from ..utils.geometry import border_band, crop_array, pad_array
from .green import GreenOperatorCache, default_cache
from .stencils import divergence_array, forward_gradient_array

DEFAULT_MARGIN = 4


def _resolve(cache: Optional[GreenOperatorCache]) -> GreenOperatorCache:
    return cache if cache is not None else default_cache()


def _check_margin(margin: int) -> None:
    if margin < 0:
        raise FieldValidationError(f"Padding margin must be >= 0, got {margin}")


def solve_laplacian_array(
    lap: np.ndarray,
    op_cache: Optional[GreenOperatorCache] = None,
    margin: int = DEFAULT_MARGIN,
) -> np.ndarray:
    """Array-level solve over the last two axes (leading axes are batched)."""
    _check_margin(margin)
    padded = pad_array(lap, margin)
    h, w = padded.shape[-2:]
    op = _resolve(op_cache).get(h, w)

    result = op.apply(padded)
    if margin > 0:
        band = border_band(h, w, margin)
        c = result[..., band].mean(axis=-1)
        result = result - c[..., None, None]
    return crop_array(result, margin)


def solve_laplacian_adjoint_array(
    upstream: np.ndarray,
    op_cache: Optional[GreenOperatorCache] = None,
    margin: int = DEFAULT_MARGIN,
) -> np.ndarray:
    # crop^T = pad, (I - 1 b^T/|B|)^T = I - b 1^T/|B|, apply^T = conj spectrum, pad^T = crop
    _check_margin(margin)
    padded = pad_array(upstream, margin)
    h, w = padded.shape[-2:]
    op = _resolve(op_cache).get(h, w)

    if margin > 0:
        band = border_band(h, w, margin)
        total = padded.sum(axis=(-2, -1))
        padded = padded - band * (total / np.count_nonzero(band))[..., None, None]
    return crop_array(op.apply_adjoint(padded), margin)


def solve_laplacian(
    lap: ScalarField,
    op_cache: Optional[GreenOperatorCache] = None,
    margin: int = DEFAULT_MARGIN,
) -> ScalarField:
    """Recover a field from its LAPLACIAN_KERNEL response; output has the input's size."""
    return ScalarField.from_array(solve_laplacian_array(lap.values, op_cache, margin))


def integrate_gradient(
    field: VectorField,
    op_cache: Optional[GreenOperatorCache] = None,
    margin: int = DEFAULT_MARGIN,
) -> ScalarField:
    """solve_laplacian(divergence(field)). Non-conservative fields are accepted."""
    lap = divergence_array(field.ex.values, field.ey.values)
    logger.debug(f"Integrating {field.ex.height}x{field.ex.width} field (margin={margin})")
    return ScalarField.from_array(solve_laplacian_array(lap, op_cache, margin))


def solve_laplacian_adjoint(
    upstream: ScalarField,
    op_cache: Optional[GreenOperatorCache] = None,
    margin: int = DEFAULT_MARGIN,
) -> ScalarField:
    return ScalarField.from_array(solve_laplacian_adjoint_array(upstream.values, op_cache, margin))


def integrate_gradient_adjoint(
    upstream: ScalarField,
    op_cache: Optional[GreenOperatorCache] = None,
    margin: int = DEFAULT_MARGIN,
) -> VectorField:
    """Transpose of integrate_gradient: forward gradient of the adjoint-solved field."""
    solved = solve_laplacian_adjoint_array(upstream.values, op_cache, margin)
    gx, gy = forward_gradient_array(solved)
    return VectorField.from_arrays(gx, gy)
