from pathlib import Path
from typing import Dict

import numpy as np
from loguru import logger
from PIL import Image, UnidentifiedImageError

from ..errors import ImageFormatError
from ..models import ScalarField

# 可逆圧縮のみ (JPEG は対象外)
SUPPORTED_FORMATS = {"PPM", "PNG", "BMP", "TIFF"}
IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm", ".png", ".bmp", ".tif", ".tiff"}

# 輝度に変換してよいモード
_CONVERTIBLE_MODES = {"1", "P", "LA", "RGB", "RGBA"}


def load_image(image_path: str | Path) -> ScalarField:
    """
    Load an 8-bit grayscale raster and scale it to [0, 1] (byte / 255).
    Colour rasters are converted to luminance first.
    """
    path = Path(image_path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {image_path}")

    try:
        with Image.open(path) as img:
            fmt = img.format
            if fmt not in SUPPORTED_FORMATS:
                raise ImageFormatError(f"Unsupported image format {fmt} for {path.name}")
            if img.width == 0 or img.height == 0:
                raise ImageFormatError(f"Zero-sized image: {path.name}")
            if img.mode in _CONVERTIBLE_MODES:
                img = img.convert("L")
            elif img.mode != "L":
                raise ImageFormatError(f"{path.name} is not 8-bit (mode {img.mode})")
            data = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, SyntaxError) as e:
        # Pillow は壊れた PNM ヘッダで SyntaxError を投げる
        raise ImageFormatError(f"Failed to decode image at {image_path}: {e}") from e

    return ScalarField.from_array(data.astype(np.float64) / 255.0)


def quantize(field: ScalarField) -> np.ndarray:
    """Clamp to [0, 1] then round half up to 8-bit."""
    clipped = np.clip(field.values, 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


def save_image(field: ScalarField, image_path: str | Path) -> None:
    """Write an 8-bit grayscale raster; the format follows the suffix (.pgm → binary P5)."""
    path = Path(image_path)
    img = Image.fromarray(quantize(field))
    try:
        img.save(path)
    except ValueError as e:
        # unknown file extension
        raise ImageFormatError(f"Cannot write {path.name}: {e}") from e
    logger.debug(f"💾 Saved {field.height}x{field.width} image to {path}")


def list_images(directory: str | Path) -> Dict[str, Path]:
    """Map file stem → path for every supported raster in ``directory`` (case-sensitive stems)."""
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"Directory not found: {directory}")

    found: Dict[str, Path] = {}
    for p in sorted(root.iterdir()):
        if not p.is_file() or p.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        if p.stem in found:
            logger.warning(f"Duplicate stem '{p.stem}' in {root}: keeping {found[p.stem].name}, skipping {p.name}")
            continue
        found[p.stem] = p
    return found
