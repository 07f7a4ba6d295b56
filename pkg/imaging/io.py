"""
PNG and PGM file I/O for frames, masks and label rasters.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from errors import DataError
from imaging.raster import BinaryMask, Frame


def read_png(path) -> Frame:
    """Read an RGB frame from a PNG file."""
    try:
        with Image.open(path) as img:
            return Frame(np.asarray(img.convert("RGB")))
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read frame {path}: {e}") from e


def write_png(frame: Frame, path) -> None:
    """Write a frame as an 8-bit RGB PNG."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(frame.pixels)).save(path, format="PNG")


def read_gray(path) -> np.ndarray:
    """Read an 8-bit single-channel image (PGM or PNG) as a uint8 array."""
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise DataError(f"{path} is not an 8-bit grayscale image (mode {img.mode})")
            return np.asarray(img).copy()
    except OSError as e:
        raise DataError(f"cannot read image {path}: {e}") from e


def write_gray(values: np.ndarray, path) -> None:
    """Write a uint8 raster as binary PGM (P5)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    values = np.ascontiguousarray(values, dtype=np.uint8)
    Image.fromarray(values).save(path, format="PPM")


def read_mask(path) -> BinaryMask:
    """Read a mask stored as PGM with values 0/255 (any nonzero counts as set)."""
    return BinaryMask(read_gray(path) > 0)


def write_mask(mask: BinaryMask, path) -> None:
    """Write a mask as PGM (P5) with values 0 and 255."""
    write_gray(mask.bits.astype(np.uint8) * 255, path)
