"""
Finite-difference stencils.

Sign convention: LAPLACIAN_KERNEL is the negative Laplacian (centre +4) and
`divergence` is the negated backward-difference divergence, so that
divergence(forward_gradient(I)) == image_laplacian(I) for any I that is zero
on its first row and column. Both gradients and divergences treat
out-of-range neighbours as 0.
"""

from typing import Literal

import cv2
import numpy as np

from ..errors import DimensionMismatchError
from ..models import ScalarField, VectorField

LAPLACIAN_KERNEL = np.array(
    [[0.0, -1.0, 0.0],
     [-1.0, 4.0, -1.0],
     [0.0, -1.0, 0.0]]
)
LAPLACIAN_KERNEL.setflags(write=False)


def laplacian_array(arr: np.ndarray, boundary: Literal["zero", "circular"] = "zero") -> np.ndarray:
    if boundary == "circular":
        return (
            4.0 * arr
            - np.roll(arr, 1, axis=-2) - np.roll(arr, -1, axis=-2)
            - np.roll(arr, 1, axis=-1) - np.roll(arr, -1, axis=-1)
        )
    if boundary != "zero":
        raise ValueError(f"Unknown boundary '{boundary}'")
    # 対称カーネルなので相関 (filter2D) = 畳み込み
    src = np.array(arr, dtype=np.float64, order="C")
    return cv2.filter2D(src, cv2.CV_64F, np.array(LAPLACIAN_KERNEL), borderType=cv2.BORDER_CONSTANT)


def forward_gradient_array(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences on the last two axes, zero beyond the last row/column."""
    gx = -arr
    gx[..., :, :-1] += arr[..., :, 1:]
    gy = -arr
    gy[..., :-1, :] += arr[..., 1:, :]
    return gx, gy


def divergence_array(ex: np.ndarray, ey: np.ndarray) -> np.ndarray:
    """Negated backward-difference divergence; exact transpose of forward_gradient_array."""
    dx = np.array(ex, dtype=np.float64)
    dx[..., :, 1:] -= ex[..., :, :-1]
    dy = np.array(ey, dtype=np.float64)
    dy[..., 1:, :] -= ey[..., :-1, :]
    return -(dx + dy)


def image_laplacian(image: ScalarField, boundary: Literal["zero", "circular"] = "zero") -> ScalarField:
    """Convolve with LAPLACIAN_KERNEL. ``boundary`` selects zero or circular extension."""
    return ScalarField.from_array(laplacian_array(image.values, boundary))


def forward_gradient(image: ScalarField) -> VectorField:
    gx, gy = forward_gradient_array(image.values)
    return VectorField.from_arrays(gx, gy)


def divergence(field: VectorField) -> ScalarField:
    if field.ex.shape != field.ey.shape:
        raise DimensionMismatchError(f"ex {field.ex.shape} and ey {field.ey.shape} differ in size")
    return ScalarField.from_array(divergence_array(field.ex.values, field.ey.values))
