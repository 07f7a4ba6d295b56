"""
Histogramming and Otsu binarization.
"""
from fractions import Fraction

import numpy as np

from errors import DegenerateHistogramError
from imaging.raster import BinaryMask, Histogram

# Relative window inside which float scores are re-ranked exactly
_NEAR_TIE = 1e-9


def otsu_threshold(hist: Histogram) -> int:
    """Return the bin index maximizing the between-class variance.

    The split is [0..t] versus (t..255]. Ties are broken by the smallest t.
    A histogram whose mass sits in a single bin returns that bin, so
    thresholding strictly above it yields an empty mask.

    Args:
        hist: 256-bin histogram with at least one nonzero bin

    Returns:
        Threshold bin index t

    Raises:
        DegenerateHistogramError: if every bin is zero
    """
    counts = hist.counts
    total = int(counts.sum())
    if total == 0:
        raise DegenerateHistogramError("cannot threshold an empty histogram")

    bins = np.arange(Histogram.BINS, dtype=np.int64)
    w0 = np.cumsum(counts)
    m0 = np.cumsum(counts * bins)
    w1 = total - w0
    mean_total = int(m0[-1])

    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return int(np.flatnonzero(counts)[0])

    # between-class variance up to the constant factor 1 / total^2:
    # (m0 * total - mean_total * w0)^2 / (w0 * w1)
    d = m0.astype(np.float64) * total - float(mean_total) * w0.astype(np.float64)
    score = np.full(Histogram.BINS, -1.0)
    score[valid] = d[valid] ** 2 / (w0[valid].astype(np.float64) * w1[valid].astype(np.float64))

    best = score.max()
    candidates = np.flatnonzero(valid & (score >= best * (1.0 - _NEAR_TIE)))
    if candidates.size == 1:
        return int(candidates[0])

    best_t, best_value = None, None
    for t in candidates:
        dt = int(m0[t]) * total - mean_total * int(w0[t])
        value = Fraction(dt * dt, int(w0[t]) * int(w1[t]))
        if best_value is None or value > best_value:
            best_t, best_value = int(t), value
    return best_t


def threshold_above(values: np.ndarray, t: float) -> BinaryMask:
    """Set every pixel whose value is strictly greater than t."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("cannot threshold an empty raster")
    return BinaryMask(values > t)


def rescale_to_bins(values: np.ndarray) -> np.ndarray:
    """Linearly map non-negative values to 0..255 by the raster maximum.

    bin = floor(255 * value / max); an all-zero raster maps to bin 0.
    """
    values = np.asarray(values, dtype=np.float64)
    peak = float(values.max()) if values.size else 0.0
    if peak <= 0.0:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = np.floor(values * (255.0 / peak))
    return np.clip(scaled, 0, 255).astype(np.uint8)


def otsu_mask(values: np.ndarray) -> BinaryMask:
    """Binarize a non-negative raster with Otsu's method on its rescaled histogram."""
    binned = rescale_to_bins(values)
    t = otsu_threshold(Histogram.of(binned))
    return threshold_above(binned, t)
