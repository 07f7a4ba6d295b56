"""
Synthetic rasters used across the tests.
"""
import numpy as np
from scipy import ndimage

from imaging.raster import BinaryMask, Frame


def textured_gray(height: int, width: int, seed: int = 0, sigma: float = 2.0) -> np.ndarray:
    """Smoothed noise stretched to the 0-255 range."""
    rng = np.random.default_rng(seed)
    noise = ndimage.gaussian_filter(rng.normal(size=(height, width)), sigma=sigma, mode="wrap")
    noise -= noise.min()
    return 255.0 * noise / noise.max()


def gray_frame(values: np.ndarray) -> Frame:
    return Frame(np.repeat(np.asarray(values, dtype=np.float64)[..., None], 3, axis=2))


def square_mask(shape: tuple, top: int, left: int, size: int) -> BinaryMask:
    bits = np.zeros(shape, dtype=bool)
    bits[top:top + size, left:left + size] = True
    return BinaryMask(bits)


def moving_square_frames(count: int = 3, step: int = 3) -> list:
    """A textured 16 x 16 patch sliding right over a dimmer textured background."""
    background = textured_gray(64, 64, seed=1) * 0.3
    patch = textured_gray(16, 16, seed=2)
    frames = []
    for k in range(count):
        image = background.copy()
        image[24:40, 10 + step * k:26 + step * k] = patch
        frames.append(gray_frame(image))
    return frames
