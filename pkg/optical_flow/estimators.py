"""
Dense two-frame optical flow estimation.

The built-in "variational" estimator minimizes the Horn-Schunck energy

    E(u, v) = sum_p (Ix du + Iy dv + It)^2 + alpha^2 sum_(p,q) |w_p - w_q|^2

coarse to fine, linearized once per pyramid level around the upsampled flow
(du, dv are increments over it; (p, q) runs over 4-neighbor pairs). Each level
is solved by red-black Gauss-Seidel sweeps, which minimize E exactly per pixel,
so the energy never increases between sweeps.
"""
import logging
from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from errors import ConfigError, DimensionMismatchError
from imaging.raster import Frame
from optical_flow.field import FlowField, FlowParams

logger = logging.getLogger(__name__)

# Pyramid levels never go below this size in either dimension
MIN_LEVEL_SIZE = 8

_CENTRAL = np.array([-0.5, 0.0, 0.5])


class FlowEstimator(ABC):
    """Interface for two-frame dense flow estimators."""

    name = "abstract"

    def __init__(self, params: FlowParams):
        self.params = params

    @abstractmethod
    def estimate(self, prev: Frame, next: Frame, trace: Optional[list] = None) -> FlowField:
        """Estimate the flow that carries `prev` onto `next`.

        Args:
            prev: Source frame
            next: Target frame, same dimensions
            trace: Optional list receiving the finest-level energy after each sweep

        Returns:
            FlowField with the dimensions of the frames
        """


def _resize(image: np.ndarray, shape: tuple) -> np.ndarray:
    """Bilinear resize with pixel-center alignment and replicated borders."""
    h, w = image.shape
    rows = (np.arange(shape[0]) + 0.5) * (h / shape[0]) - 0.5
    cols = (np.arange(shape[1]) + 0.5) * (w / shape[1]) - 0.5
    grid = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(image, grid, order=1, mode="nearest")


def _gradients(image: np.ndarray) -> tuple:
    gx = ndimage.correlate1d(image, _CENTRAL, axis=1, mode="nearest")
    gy = ndimage.correlate1d(image, _CENTRAL, axis=0, mode="nearest")
    return gx, gy


def _warp(image: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sample image at (row + v, col + u) with bilinear interpolation."""
    h, w = image.shape
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    return ndimage.map_coordinates(image, [rows + v, cols + u], order=1, mode="nearest")


def _neighbor_counts(shape: tuple) -> np.ndarray:
    counts = np.zeros(shape)
    counts[1:, :] += 1
    counts[:-1, :] += 1
    counts[:, 1:] += 1
    counts[:, :-1] += 1
    return np.maximum(counts, 1.0)


def _neighbor_sum(a: np.ndarray) -> np.ndarray:
    s = np.zeros_like(a)
    s[1:, :] += a[:-1, :]
    s[:-1, :] += a[1:, :]
    s[:, 1:] += a[:, :-1]
    s[:, :-1] += a[:, 1:]
    return s


class HornSchunckEstimator(FlowEstimator):
    """Coarse-to-fine Horn-Schunck solver."""

    name = "variational"

    def _pyramid_shapes(self, shape: tuple) -> list:
        shapes = [shape]
        for _ in range(1, self.params.pyramid_levels):
            h, w = shapes[-1]
            nxt = (int(round(h * self.params.pyramid_scale)), int(round(w * self.params.pyramid_scale)))
            if min(nxt) < MIN_LEVEL_SIZE:
                logger.debug(f"Pyramid truncated to {len(shapes)} levels for {shape}")
                break
            shapes.append(nxt)
        return shapes

    def _pyramid(self, image: np.ndarray, shapes: list) -> list:
        sigma = 0.5 / self.params.pyramid_scale
        levels = [image]
        for shape in shapes[1:]:
            smoothed = ndimage.gaussian_filter(levels[-1], sigma=sigma, mode="nearest")
            levels.append(_resize(smoothed, shape))
        return levels

    def _energy(self, Ix, Iy, It, du, dv, u, v, alpha2) -> float:
        data = np.sum((Ix * du + Iy * dv + It) ** 2)
        smooth = (
            np.sum(np.diff(u, axis=0) ** 2) + np.sum(np.diff(u, axis=1) ** 2)
            + np.sum(np.diff(v, axis=0) ** 2) + np.sum(np.diff(v, axis=1) ** 2)
        )
        return float(data + alpha2 * smooth)

    def _solve_level(self, I1, I2, u, v, trace: Optional[list]) -> tuple:
        alpha2 = self.params.smoothness_weight ** 2
        if np.any(u) or np.any(v):
            warped = _warp(I2, u, v)
        else:
            warped = I2
        g1x, g1y = _gradients(I1)
        g2x, g2y = _gradients(warped)
        Ix = 0.5 * (g1x + g2x)
        Iy = 0.5 * (g1y + g2y)
        It = warped - I1

        u0, v0 = u.copy(), v.copy()
        counts = _neighbor_counts(u.shape)
        denom = alpha2 * counts + Ix ** 2 + Iy ** 2
        rows, cols = np.indices(u.shape)
        red = (rows + cols) % 2 == 0
        colors = (red, ~red)

        for _ in range(self.params.iterations_per_level):
            for color in colors:
                ubar = _neighbor_sum(u) / counts
                vbar = _neighbor_sum(v) / counts
                t = (Ix * (ubar - u0) + Iy * (vbar - v0) + It) / denom
                u[color] = (ubar - Ix * t)[color]
                v[color] = (vbar - Iy * t)[color]
            if trace is not None:
                trace.append(self._energy(Ix, Iy, It, u - u0, v - v0, u, v, alpha2))
        return u, v

    def estimate(self, prev: Frame, next: Frame, trace: Optional[list] = None) -> FlowField:
        if prev.shape != next.shape:
            raise DimensionMismatchError("flow frames", prev.shape, next.shape)

        shapes = self._pyramid_shapes(prev.shape)
        pyr1 = self._pyramid(prev.gray(), shapes)
        pyr2 = self._pyramid(next.gray(), shapes)

        u = np.zeros(shapes[-1])
        v = np.zeros(shapes[-1])
        for level in range(len(shapes) - 1, -1, -1):
            shape = shapes[level]
            if u.shape != shape:
                coarse = u.shape
                u = _resize(u, shape) * (shape[1] / coarse[1])
                v = _resize(v, shape) * (shape[0] / coarse[0])
            level_trace = trace if level == 0 else None
            u, v = self._solve_level(pyr1[level], pyr2[level], u, v, level_trace)

        return FlowField.from_components(u, v)


# Registry of estimators selectable by name
_ESTIMATORS: dict = {HornSchunckEstimator.name: HornSchunckEstimator}


def register_estimator(name: str, factory: Callable[[FlowParams], FlowEstimator]) -> None:
    """Make an estimator (e.g. a learned backend) selectable by name."""
    _ESTIMATORS[name] = factory


def get_estimator(params: Optional[FlowParams] = None) -> FlowEstimator:
    """Instantiate the estimator named by `params.estimator`."""
    params = params or FlowParams.from_config()
    try:
        factory = _ESTIMATORS[params.estimator]
    except KeyError:
        raise ConfigError(
            f"unknown flow estimator '{params.estimator}' (available: {', '.join(sorted(_ESTIMATORS))})"
        ) from None
    return factory(params)


# Convenience function
def estimate_flow(prev: Frame, next: Frame, params: Optional[FlowParams] = None,
                  trace: Optional[list] = None) -> FlowField:
    """Estimate dense flow from `prev` to `next`.

    Args:
        prev: Source frame
        next: Target frame
        params: Solver parameters (default from config)
        trace: Optional list receiving the finest-level energy per sweep

    Returns:
        FlowField carrying prev onto next
    """
    return get_estimator(params).estimate(prev, next, trace=trace)
