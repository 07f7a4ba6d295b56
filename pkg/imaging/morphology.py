"""
Connected components and binary morphology.
"""
from typing import Optional

import numpy as np
from scipy import ndimage

from imaging.raster import BinaryMask, Component

# 8-connectivity
_EIGHT = np.ones((3, 3), dtype=bool)


def label_mask(mask: BinaryMask) -> tuple:
    """Label 8-connected components, numbering them 1..n in raster scan order.

    Returns:
        (labels, n) where labels is an int32 raster with 0 for background
    """
    labels, n = ndimage.label(mask.bits, structure=_EIGHT)
    if n == 0:
        return labels.astype(np.int32), 0

    # renumber by first pixel in scan order
    flat = labels.ravel()
    nonzero = np.flatnonzero(flat)
    _, first = np.unique(flat[nonzero], return_index=True)
    order = np.argsort(nonzero[first])
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return remap[labels], n


def connected_components(mask: BinaryMask) -> list[Component]:
    """Partition the set pixels into maximal 8-connected components.

    Args:
        mask: Input mask

    Returns:
        Components with labels 1..n in scan order of their first pixel
    """
    labels, n = label_mask(mask)
    if n == 0:
        return []

    height, width = mask.shape
    rows, cols = np.nonzero(labels)
    ids = labels[rows, cols]
    order = np.argsort(ids, kind="stable")
    rows, cols, ids = rows[order], cols[order], ids[order]
    splits = np.searchsorted(ids, np.arange(1, n + 1))

    components = []
    for label in range(1, n + 1):
        start = splits[label - 1]
        stop = splits[label] if label < n else ids.size
        r, c = rows[start:stop], cols[start:stop]
        bbox = (int(r.min()), int(c.min()), int(r.max()), int(c.max()))
        touches = bbox[0] == 0 or bbox[1] == 0 or bbox[2] == height - 1 or bbox[3] == width - 1
        components.append(Component(
            label=label,
            pixels=np.stack([r, c], axis=1),
            bbox=bbox,
            touches_border=bool(touches),
        ))
    return components


def mask_from_components(components: list[Component], shape: tuple) -> BinaryMask:
    """Rasterize a list of components back into a mask."""
    bits = np.zeros(shape, dtype=bool)
    for component in components:
        bits[component.pixels[:, 0], component.pixels[:, 1]] = True
    return BinaryMask(bits)


def _square(radius: int) -> np.ndarray:
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def erode(bits: np.ndarray, radius: int) -> np.ndarray:
    # outside the raster counts as set, so a full mask is a fixed point
    return ndimage.binary_erosion(bits, structure=_square(radius), border_value=1)


def dilate(bits: np.ndarray, radius: int) -> np.ndarray:
    return ndimage.binary_dilation(bits, structure=_square(radius), border_value=0)


def morph_open_close(mask: BinaryMask, radius: Optional[int] = None, iterations: int = 1) -> BinaryMask:
    """Morphological opening followed by closing with a square element.

    Args:
        mask: Input mask
        radius: Half side of the (2 * radius + 1) square element, default from config
        iterations: How many times the open/close pair is applied

    Returns:
        Filtered mask
    """
    if radius is None:
        from config import config
        radius = config.MORPH_RADIUS
    if radius < 1:
        raise ValueError("morphology radius must be at least 1")
    bits = mask.bits
    for _ in range(iterations):
        bits = dilate(erode(bits, radius), radius)
        bits = erode(dilate(bits, radius), radius)
    return BinaryMask(bits)
