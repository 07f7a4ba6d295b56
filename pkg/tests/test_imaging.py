from collections import deque
from fractions import Fraction

import numpy as np
import pytest

from errors import DataError, DegenerateHistogramError, DimensionMismatchError
from imaging.io import read_gray, read_mask, read_png, write_gray, write_mask, write_png
from imaging.morphology import connected_components, label_mask, mask_from_components, morph_open_close
from imaging.raster import BinaryMask, Frame, Histogram
from imaging.threshold import otsu_mask, otsu_threshold, rescale_to_bins, threshold_above


def exhaustive_otsu(counts) -> int:
    """Exact between-class variance maximization, smallest index on ties."""
    counts = [int(c) for c in counts]
    total = sum(counts)
    best_t, best = None, None
    w0 = m0 = 0
    m_total = sum(i * c for i, c in enumerate(counts))
    for t in range(256):
        w0 += counts[t]
        m0 += t * counts[t]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        mu0 = Fraction(m0, w0)
        mu1 = Fraction(m_total - m0, w1)
        value = Fraction(w0 * w1, total * total) * (mu0 - mu1) ** 2
        if best is None or value > best:
            best_t, best = t, value
    if best_t is None:
        return next(i for i, c in enumerate(counts) if c)
    return best_t


def flood_fill_components(bits) -> list:
    """8-connected components by breadth-first search, in scan order."""
    h, w = bits.shape
    seen = np.zeros_like(bits)
    components = []
    for r in range(h):
        for c in range(w):
            if not bits[r, c] or seen[r, c]:
                continue
            seen[r, c] = True
            queue, pixels = deque([(r, c)]), set()
            while queue:
                y, x = queue.popleft()
                pixels.add((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and bits[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((ny, nx))
            components.append(frozenset(pixels))
    return components


# Otsu

def test_otsu_matches_exhaustive_oracle(rng):
    mismatches = 0
    for k in range(1000):
        counts = rng.integers(0, 60, size=256)
        if k % 3 == 0:
            counts[rng.random(256) < 0.9] = 0
        if counts.sum() == 0:
            counts[rng.integers(256)] = 1
        if otsu_threshold(Histogram(counts)) != exhaustive_otsu(counts):
            mismatches += 1
    assert mismatches == 0


def test_otsu_matches_oracle_on_sparse_histograms(rng):
    for _ in range(300):
        counts = np.zeros(256, dtype=np.int64)
        idx = rng.choice(256, size=rng.integers(1, 6), replace=False)
        counts[idx] = rng.integers(1, 20, size=idx.size)
        assert otsu_threshold(Histogram(counts)) == exhaustive_otsu(counts)


def test_otsu_tie_takes_smallest_index():
    counts = np.zeros(256, dtype=np.int64)
    counts[10] = 5
    counts[200] = 5
    assert otsu_threshold(Histogram(counts)) == 10


def test_otsu_single_bin_returns_that_bin():
    counts = np.zeros(256, dtype=np.int64)
    counts[42] = 100
    t = otsu_threshold(Histogram(counts))
    assert t == 42
    assert threshold_above(np.full((4, 4), 42), t).is_empty()


def test_otsu_empty_histogram_raises():
    with pytest.raises(DegenerateHistogramError):
        otsu_threshold(Histogram(np.zeros(256, dtype=np.int64)))


def test_threshold_above_is_strict_and_monotone(rng):
    values = rng.integers(0, 256, size=(32, 32))
    masks = [threshold_above(values, t) for t in range(0, 256, 17)]
    for looser, tighter in zip(masks, masks[1:]):
        assert tighter.is_subset_of(looser)
    assert threshold_above(np.array([[5, 6]]), 5) == BinaryMask(np.array([[False, True]]))


def test_rescale_to_bins():
    assert rescale_to_bins(np.zeros((3, 3))).max() == 0
    np.testing.assert_array_equal(rescale_to_bins(np.array([0.0, 1.0, 2.0])), [0, 127, 255])


def test_otsu_mask_separates_two_levels():
    values = np.zeros((20, 20))
    values[5:10, 5:10] = 3.0
    mask = otsu_mask(values)
    assert mask.area == 25
    assert mask.bits[7, 7]


def test_histogram_rejects_out_of_range():
    with pytest.raises(ValueError):
        Histogram.of(np.array([0, 256]))


# Rasters

def test_mask_set_algebra_and_shape_checks():
    a = BinaryMask(np.array([[1, 1, 0]]))
    b = BinaryMask(np.array([[0, 1, 1]]))
    assert (a & b).area == 1
    assert (a | b).area == 3
    assert a.difference(b) == BinaryMask(np.array([[1, 0, 0]]))
    assert (~a).area == 1
    with pytest.raises(DimensionMismatchError):
        a & BinaryMask.empty(2, 3)


def test_rasters_are_read_only():
    frame = Frame.blank(4, 4, (10, 20, 30))
    with pytest.raises(ValueError):
        frame.pixels[0, 0, 0] = 1
    assert frame.shape == (4, 4)
    with pytest.raises(ValueError):
        Frame(np.zeros((4, 4)))


# Components and morphology

def test_components_empty_and_diagonal():
    assert connected_components(BinaryMask.empty(5, 5)) == []
    bits = np.zeros((5, 5), dtype=bool)
    bits[1, 1] = bits[2, 2] = True
    components = connected_components(BinaryMask(bits))
    assert len(components) == 1
    assert components[0].area == 2


def test_components_match_flood_fill(rng):
    for _ in range(20):
        bits = rng.random((64, 64)) < 0.4
        components = connected_components(BinaryMask(bits))
        expected = flood_fill_components(bits)
        got = [frozenset(map(tuple, c.pixels.tolist())) for c in components]
        assert got == expected
        assert [c.label for c in components] == list(range(1, len(expected) + 1))
        assert mask_from_components(components, bits.shape) == BinaryMask(bits)


def test_label_mask_scan_order():
    bits = np.zeros((6, 6), dtype=bool)
    bits[4, 0] = True
    bits[0, 5] = True
    labels, n = label_mask(BinaryMask(bits))
    assert n == 2
    assert labels[0, 5] == 1 and labels[4, 0] == 2


def test_component_border_and_distance():
    bits = np.zeros((10, 10), dtype=bool)
    bits[0:2, 4:6] = True
    bits[5:7, 5:7] = True
    first, second = connected_components(BinaryMask(bits))
    assert first.touches_border and not second.touches_border
    assert second.min_distance_to((5.0, 2.0)) == pytest.approx(3.0)
    assert second.bbox == (5, 5, 6, 6)


def test_morph_open_close_basics():
    assert morph_open_close(BinaryMask.empty(8, 8), radius=1).is_empty()
    single = np.zeros((8, 8), dtype=bool)
    single[4, 4] = True
    assert morph_open_close(BinaryMask(single), radius=1).is_empty()
    full = BinaryMask.full(6, 6)
    assert morph_open_close(full, radius=1) == full


def test_morph_closing_fills_pinholes():
    bits = np.zeros((30, 30), dtype=bool)
    bits[5:25, 5:25] = True
    solid = bits.copy()
    for r in (8, 14, 20):
        for c in (8, 14, 20):
            bits[r, c] = False
    assert morph_open_close(BinaryMask(bits), radius=1) == BinaryMask(solid)


def test_morph_open_close_idempotent(rng):
    mask = BinaryMask(rng.random((40, 40)) < 0.5)
    once = morph_open_close(mask, radius=1)
    assert morph_open_close(once, radius=1) == once


def test_morph_radius_must_be_positive():
    with pytest.raises(ValueError):
        morph_open_close(BinaryMask.empty(3, 3), radius=0)


# File I/O

def test_png_and_pgm_round_trips(tmp_path, rng):
    frame = Frame(rng.integers(0, 256, size=(12, 17, 3)))
    write_png(frame, tmp_path / "f.png")
    assert read_png(tmp_path / "f.png") == frame

    mask = BinaryMask(rng.random((12, 17)) < 0.3)
    write_mask(mask, tmp_path / "m.pgm")
    assert read_mask(tmp_path / "m.pgm") == mask
    assert (tmp_path / "m.pgm").read_bytes().startswith(b"P5")

    values = rng.integers(0, 256, size=(5, 9)).astype(np.uint8)
    write_gray(values, tmp_path / "g.pgm")
    np.testing.assert_array_equal(read_gray(tmp_path / "g.pgm"), values)


def test_read_png_rejects_garbage(tmp_path):
    path = tmp_path / "broken.png"
    path.write_bytes(b"not an image")
    with pytest.raises(DataError):
        read_png(path)
