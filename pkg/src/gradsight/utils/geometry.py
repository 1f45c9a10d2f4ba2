from typing import Tuple

import numpy as np

from ..errors import FieldValidationError
from ..models import ScalarField, ValidMask


def pad_array(arr: np.ndarray, margin: int) -> np.ndarray:
    """Zero-pad the last two axes of ``arr`` by ``margin`` on every side."""
    widths = [(0, 0)] * (arr.ndim - 2) + [(margin, margin), (margin, margin)]
    return np.pad(arr, widths, mode="constant", constant_values=0.0)


def crop_array(arr: np.ndarray, margin: int) -> np.ndarray:
    if margin == 0:
        return arr
    return arr[..., margin:-margin, margin:-margin]


def border_band(height: int, width: int, margin: int) -> np.ndarray:
    """Boolean grid, True on the outer ``margin``-pixel band."""
    band = np.ones((height, width), dtype=np.bool_)
    band[margin:height - margin, margin:width - margin] = False
    return band


def zero_pad(field: ScalarField, margin: int) -> ScalarField:
    if margin < 0:
        raise FieldValidationError(f"Padding margin must be >= 0, got {margin}")
    return ScalarField.from_array(pad_array(field.values, margin))


def crop_pad(field: ScalarField, margin: int) -> ScalarField:
    """Inverse of zero_pad: drop ``margin`` pixels on every side."""
    if margin < 0:
        raise FieldValidationError(f"Crop margin must be >= 0, got {margin}")
    if field.height <= 2 * margin or field.width <= 2 * margin:
        raise FieldValidationError(
            f"Crop margin {margin} too large for a {field.height}x{field.width} field"
        )
    return ScalarField.from_array(crop_array(field.values, margin))


def pad_to_size(field: ScalarField, height: int, width: int) -> Tuple[ScalarField, ValidMask]:
    """
    Zero-pad a map all around until it reaches (height, width).
    The returned mask flags the original pixels only, so metrics ignore the padding.
    """
    if height < field.height or width < field.width:
        raise FieldValidationError(
            f"Target {height}x{width} is smaller than the {field.height}x{field.width} field"
        )
    top = (height - field.height) // 2
    left = (width - field.width) // 2

    canvas = np.zeros((height, width))
    canvas[top:top + field.height, left:left + field.width] = field.values
    flags = np.zeros((height, width), dtype=np.bool_)
    flags[top:top + field.height, left:left + field.width] = True
    return ScalarField.from_array(canvas), ValidMask.from_array(flags)


def minmax_normalize(field: ScalarField) -> ScalarField:
    """Rescale to [0, 1]. A constant field maps to all zeros."""
    lo = field.values.min()
    span = field.values.max() - lo
    if span == 0:
        return ScalarField.zeros(field.height, field.width)
    return ScalarField.from_array((field.values - lo) / span)


def disk(size: int, radius: float) -> ScalarField:
    """Filled binary disk centred in a size x size grid."""
    if not 0 < radius < size / 2:
        raise FieldValidationError(f"Disk radius must satisfy 0 < r < size/2, got r={radius}, size={size}")
    center = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    inside = (yy - center) ** 2 + (xx - center) ** 2 <= radius ** 2
    if not inside.any():
        raise FieldValidationError(f"Disk of radius {radius} covers no pixel centre of a {size}x{size} grid")
    return ScalarField.from_array(inside.astype(np.float64))
