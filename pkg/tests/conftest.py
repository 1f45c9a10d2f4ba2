import numpy as np
import pytest

from gradsight.solver.green import GreenOperatorCache


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def cache():
    return GreenOperatorCache()


@pytest.fixture
def border_zero_image():
    """Factory: random image that is exactly zero on its outer ``band`` pixels."""
    def _make(rng: np.random.Generator, height: int, width: int, band: int = 4) -> np.ndarray:
        img = np.zeros((height, width))
        img[band:height - band, band:width - band] = rng.random((height - 2 * band, width - 2 * band))
        return img
    return _make
