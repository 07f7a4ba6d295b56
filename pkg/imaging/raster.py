"""
Core raster types: RGB frames, binary masks, connected components and histograms.
All buffers are copied on construction and made read-only, so instances can be
shared across threads.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import DimensionMismatchError


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Frame:
    """H x W RGB raster with 8-bit channels."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"Frame needs an H x W x 3 array, got shape {pixels.shape}")
        if pixels.shape[0] == 0 or pixels.shape[1] == 0:
            raise ValueError("Frame must not be empty")
        if pixels.dtype != np.uint8:
            if np.issubdtype(pixels.dtype, np.floating) and not np.all(np.isfinite(pixels)):
                raise ValueError("Frame pixels must be finite")
            pixels = np.clip(np.rint(pixels), 0, 255)
        object.__setattr__(self, "pixels", _frozen(pixels, np.uint8))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple:
        """(height, width) of the frame."""
        return self.pixels.shape[:2]

    def gray(self) -> np.ndarray:
        """Luma (0.299 R + 0.587 G + 0.114 B) as float64 on the 0-255 scale."""
        rgb = self.pixels.astype(np.float64)
        return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    @classmethod
    def blank(cls, height: int, width: int, color=(0, 0, 0)) -> "Frame":
        """Create a frame filled with a single color."""
        pixels = np.empty((height, width, 3), dtype=np.uint8)
        pixels[...] = np.asarray(color, dtype=np.uint8)
        return cls(pixels)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """H x W boolean raster."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"BinaryMask needs a 2-D array, got shape {bits.shape}")
        if bits.dtype != bool:
            bits = bits != 0
        object.__setattr__(self, "bits", _frozen(bits, bool))

    @classmethod
    def empty(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.ones((height, width), dtype=bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple:
        return self.bits.shape

    @property
    def area(self) -> int:
        """Number of set pixels."""
        return int(np.count_nonzero(self.bits))

    def is_empty(self) -> bool:
        return not self.bits.any()

    def require_same_shape(self, other, what: str = "mask") -> None:
        """Raise DimensionMismatchError unless `other` has this mask's shape."""
        other_shape = tuple(other.shape)
        if other_shape != tuple(self.shape):
            raise DimensionMismatchError(what, tuple(self.shape), other_shape)

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        self.require_same_shape(other)
        return BinaryMask(self.bits & other.bits)

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        self.require_same_shape(other)
        return BinaryMask(self.bits | other.bits)

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.bits)

    def difference(self, other: "BinaryMask") -> "BinaryMask":
        """Pixels set here and unset in `other`."""
        self.require_same_shape(other)
        return BinaryMask(self.bits & ~other.bits)

    def is_subset_of(self, other: "BinaryMask") -> bool:
        self.require_same_shape(other)
        return not np.any(self.bits & ~other.bits)

    def centroid(self) -> Optional[tuple]:
        """Mean (row, col) of the set pixels, or None for an empty mask."""
        rows, cols = np.nonzero(self.bits)
        if rows.size == 0:
            return None
        return float(rows.mean()), float(cols.mean())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@dataclass(frozen=True, eq=False)
class Component:
    """One 8-connected component of a binary mask."""

    label: int
    pixels: np.ndarray  # (n, 2) array of (row, col)
    bbox: tuple  # (min_row, min_col, max_row, max_col), inclusive
    touches_border: bool

    @property
    def area(self) -> int:
        return int(self.pixels.shape[0])

    def min_distance_to(self, point: tuple) -> float:
        """Minimum Euclidean distance from any component pixel to (row, col)."""
        d = np.hypot(self.pixels[:, 0] - point[0], self.pixels[:, 1] - point[1])
        return float(d.min())

    def to_mask(self, shape: tuple) -> BinaryMask:
        bits = np.zeros(shape, dtype=bool)
        bits[self.pixels[:, 0], self.pixels[:, 1]] = True
        return BinaryMask(bits)


@dataclass(frozen=True, eq=False)
class Histogram:
    """256-bin histogram of magnitude or intensity values."""

    counts: np.ndarray

    BINS = 256

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (self.BINS,):
            raise ValueError(f"Histogram needs {self.BINS} bins, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("Histogram counts must be non-negative")
        object.__setattr__(self, "counts", _frozen(counts, np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def of(cls, values: np.ndarray) -> "Histogram":
        """Histogram of integer values in [0, 255]."""
        values = np.asarray(values)
        if values.size and (values.min() < 0 or values.max() > 255):
            raise ValueError("Histogram values must lie in [0, 255]")
        return cls(np.bincount(values.astype(np.int64).ravel(), minlength=cls.BINS))
