"""
Spectral Green's function of the 5-point Laplacian.

The padded Dirac (a single 1 at (1, 1)) and the padded Laplacian kernel
(stencil in the top-left 3x3 block, centre at (1, 1)) are transformed with the
same FFT; their ratio is the Green's function in the Fourier domain. The
shared (1, 1) offset cancels in the ratio, so convolving with the spectrum
does not shift the solution.
"""

import threading
from typing import Dict, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, field_validator

from ..errors import FieldValidationError
from .stencils import LAPLACIAN_KERNEL

MIN_SIZE = 3


class GreenOperator(BaseModel):
    """Immutable Green spectrum for one working size, DC bin set to 0."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    height: int
    width: int
    spectrum: np.ndarray

    @field_validator("spectrum")
    @classmethod
    def _freeze(cls, v: np.ndarray) -> np.ndarray:
        v.setflags(write=False)
        return v

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def apply(self, arr: np.ndarray) -> np.ndarray:
        """Circular convolution with the Green's function over the last two axes (real part)."""
        return np.real(np.fft.ifft2(np.fft.fft2(arr) * self.spectrum))

    def apply_adjoint(self, arr: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifft2(np.fft.fft2(arr) * np.conj(self.spectrum)))


def padded_dirac(height: int, width: int) -> np.ndarray:
    delta = np.zeros((height, width))
    delta[1, 1] = 1.0
    return delta


def padded_laplacian_kernel(height: int, width: int) -> np.ndarray:
    kernel = np.zeros((height, width))
    kernel[:3, :3] = LAPLACIAN_KERNEL
    return kernel


def build_green_operator(height: int, width: int) -> GreenOperator:
    if height < MIN_SIZE or width < MIN_SIZE:
        raise FieldValidationError(
            f"Green operator needs at least {MIN_SIZE}x{MIN_SIZE} to embed the stencil, got {height}x{width}"
        )

    numerator = np.fft.fft2(padded_dirac(height, width))
    denominator = np.fft.fft2(padded_laplacian_kernel(height, width))

    # DC だけが 0 になる (4 - 2cos - 2cos)。平均ゼロ解を選び、定数は c で決める
    denominator[0, 0] = 1.0
    spectrum = numerator / denominator
    spectrum[0, 0] = 0.0

    return GreenOperator(height=height, width=width, spectrum=spectrum)


class GreenOperatorCache:
    """
    Operators keyed by working size. Lookups are lock-free; insertion is
    serialized so each size is built once.
    """

    def __init__(self):
        self._operators: Dict[Tuple[int, int], GreenOperator] = {}
        self._lock = threading.Lock()
        self.misses = 0

    def get(self, height: int, width: int) -> GreenOperator:
        key = (height, width)
        op = self._operators.get(key)
        if op is not None:
            return op

        with self._lock:
            op = self._operators.get(key)
            if op is None:
                logger.debug(f"Green operator cache miss: building {height}x{width}")
                op = build_green_operator(height, width)
                self._operators[key] = op
                self.misses += 1
        return op

    def __len__(self) -> int:
        return len(self._operators)

    def __contains__(self, key: Tuple[int, int]) -> bool:
        return key in self._operators


_default_cache = GreenOperatorCache()


def default_cache() -> GreenOperatorCache:
    return _default_cache
