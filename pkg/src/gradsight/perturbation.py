"""
gradsight.perturbation
~~~~~~~~~~~~~~~~~~~~~~
Test-set degradations: salt-and-pepper noise and brightness reduction.

Randomness comes from ``Pcg64Stream``: numpy's PCG64 bit generator seeded
through SeedSequence(seed), consumed as raw 64-bit words. Only the raw words
are used (no Generator methods), so the output is identical across platforms
and numpy versions.

  - positions: partial Fisher-Yates over 0..N-1, each draw below a bound uses
    rejection sampling (words >= floor(2^64 / bound) * bound are redrawn)
  - colours: after all positions are drawn, one word per position; lowest bit
    1 → salt (1.0), 0 → pepper (0.0)
"""

from typing import List, Sequence

import numpy as np
from loguru import logger

from .errors import DimensionMismatchError, FieldValidationError
from .models import NoiseSpec, ScalarField

_WORD = 1 << 64


class Pcg64Stream:
    _CHUNK = 1024

    def __init__(self, seed: int):
        self._bitgen = np.random.PCG64(seed)
        self._buffer: List[int] = []
        self._pos = 0

    def next_word(self) -> int:
        if self._pos >= len(self._buffer):
            self._buffer = self._bitgen.random_raw(self._CHUNK).tolist()
            self._pos = 0
        word = self._buffer[self._pos]
        self._pos += 1
        return word

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        limit = (_WORD // bound) * bound
        while True:
            word = self.next_word()
            if word < limit:
                return word % bound


def corrupted_count(n_pixels: int, fraction: float) -> int:
    # round half up
    return int(np.floor(fraction * n_pixels + 0.5))


def sample_corruption(n_pixels: int, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Flat positions (without replacement) and their 0/1 values."""
    k = corrupted_count(n_pixels, spec.fraction)
    stream = Pcg64Stream(spec.seed)

    perm = np.arange(n_pixels)
    for i in range(k):
        j = i + stream.below(n_pixels - i)
        perm[i], perm[j] = perm[j], perm[i]
    positions = perm[:k].copy()

    values = np.array([float(stream.next_word() & 1) for _ in range(k)])
    return positions, values


def _check_unit_range(image: ScalarField) -> None:
    if image.values.min() < 0.0 or image.values.max() > 1.0:
        raise FieldValidationError("Perturbations expect image values in [0, 1]")


def salt_pepper(image: ScalarField, spec: NoiseSpec) -> ScalarField:
    """Overwrite exactly round(fraction x N) random pixels with 0 or 1."""
    return salt_pepper_channels([image], spec)[0]


def salt_pepper_channels(channels: Sequence[ScalarField], spec: NoiseSpec) -> List[ScalarField]:
    """Joint corruption: every channel gets the same positions and the same 0/1 values."""
    if not channels:
        return []
    shape = channels[0].shape
    for ch in channels:
        if ch.shape != shape:
            raise DimensionMismatchError(f"Channel sizes differ: {shape} vs {ch.shape}")
        _check_unit_range(ch)

    positions, values = sample_corruption(shape[0] * shape[1], spec)
    logger.debug(f"salt-and-pepper: {positions.size} of {shape[0] * shape[1]} pixels (seed={spec.seed})")

    out = []
    for ch in channels:
        flat = ch.values.ravel().copy()
        flat[positions] = values
        out.append(ScalarField.from_array(flat.reshape(shape)))
    return out


def darken(image: ScalarField, factor: float) -> ScalarField:
    """Multiply every value by ``factor`` ("reduced by 80%" → factor 0.2)."""
    if not 0.0 <= factor <= 1.0:
        raise FieldValidationError(f"Darken factor must lie in [0, 1], got {factor}")
    return ScalarField.from_array(image.values * factor)
