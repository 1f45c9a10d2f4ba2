"""
Binary tensor interchange format.

    magic   8 bytes  b"GRADTNSR"
    ndim    uint64 little-endian
    dims    ndim x uint64 little-endian
    data    prod(dims) x float64 little-endian, row-major
"""

from pathlib import Path

import numpy as np
from loguru import logger

from ..errors import TensorFormatError
from ..models import FeatureBatch, ScalarField

MAGIC = b"GRADTNSR"
_HEADER_WORD = np.dtype("<u8")
_DATA = np.dtype("<f8")


def save_tensor(values: np.ndarray, tensor_path: str | Path) -> None:
    arr = np.ascontiguousarray(values, dtype=_DATA)
    header = np.array([arr.ndim, *arr.shape], dtype=_HEADER_WORD)
    with open(tensor_path, "wb") as f:
        f.write(MAGIC)
        f.write(header.tobytes())
        f.write(arr.tobytes())
    logger.debug(f"💾 Saved tensor {arr.shape} to {tensor_path}")


def load_tensor(tensor_path: str | Path) -> np.ndarray:
    path = Path(tensor_path)
    if not path.exists():
        raise FileNotFoundError(f"Tensor not found: {tensor_path}")

    raw = path.read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise TensorFormatError(f"{path.name} is not a tensor file (bad magic)")

    offset = len(MAGIC)
    if len(raw) < offset + 8:
        raise TensorFormatError(f"{path.name}: truncated header")
    ndim = int(np.frombuffer(raw, dtype=_HEADER_WORD, count=1, offset=offset)[0])
    offset += 8
    if ndim == 0 or ndim > 8 or len(raw) < offset + 8 * ndim:
        raise TensorFormatError(f"{path.name}: invalid rank {ndim}")
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype=_HEADER_WORD, count=ndim, offset=offset))
    offset += 8 * ndim

    count = int(np.prod(dims))
    if len(raw) - offset != count * _DATA.itemsize:
        raise TensorFormatError(
            f"{path.name}: expected {count} values for shape {dims}, found {(len(raw) - offset) // 8}"
        )
    data = np.frombuffer(raw, dtype=_DATA, count=count, offset=offset)
    return data.reshape(dims).astype(np.float64)


def load_field(tensor_path: str | Path) -> ScalarField:
    """Read a 2-D tensor (1 x 1 x H x W is accepted as well)."""
    arr = load_tensor(tensor_path)
    if arr.ndim == 4 and arr.shape[:2] == (1, 1):
        arr = arr[0, 0]
    if arr.ndim != 2:
        raise TensorFormatError(f"{Path(tensor_path).name}: expected a 2-D field, got shape {arr.shape}")
    return ScalarField.from_array(arr)


def load_batch(tensor_path: str | Path) -> FeatureBatch:
    arr = load_tensor(tensor_path)
    if arr.ndim != 4:
        raise TensorFormatError(f"{Path(tensor_path).name}: expected N x C x H x W, got shape {arr.shape}")
    return FeatureBatch.from_array(arr)
