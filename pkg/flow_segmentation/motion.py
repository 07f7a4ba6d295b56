"""
Motion masks from forward and backward optical flow.

Each flow field is binarized on its own magnitude histogram with Otsu's
method; the two masks are then combined according to a FlowMaskMode.
Backward flow is the flow from frame t to frame t-1.

Pixels that stay put in either direction (halos the smooth flow field
spreads around moving edges, and background a moving part uncovers or is
about to cover) can be dropped from the combined mask.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from config import config
from errors import ConfigError, DimensionMismatchError, SequenceTooShortError
from imaging.raster import BinaryMask, Frame
from imaging.threshold import otsu_mask
from optical_flow.estimators import FlowEstimator, get_estimator
from optical_flow.field import FlowField, FlowParams, flow_magnitude
from utils.window import sliding_triples

logger = logging.getLogger(__name__)


class FlowMaskMode(str, Enum):
    """How forward and backward motion masks are combined."""

    FORWARD_ONLY = "forward"
    INTERSECTION = "intersection"
    UNION = "union"

    @classmethod
    def parse(cls, value) -> "FlowMaskMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown flow mode '{value}' (expected one of: {', '.join(m.value for m in cls)})"
            ) from None


def flow_mask(flow: FlowField) -> BinaryMask:
    """Otsu-thresholded magnitude of a single flow field."""
    return otsu_mask(flow_magnitude(flow))


def combine_masks(forward: Optional[BinaryMask], backward: Optional[BinaryMask],
                  mode: FlowMaskMode) -> BinaryMask:
    """Combine forward and backward motion masks.

    A missing side (first or last frame of a sequence) leaves the other one
    as the result, whatever the mode.
    """
    if forward is None and backward is None:
        raise ValueError("at least one motion mask is required")
    if backward is None:
        return forward
    if forward is None:
        return backward
    forward.require_same_shape(backward, "backward motion mask")
    if mode is FlowMaskMode.FORWARD_ONLY:
        return forward
    if mode is FlowMaskMode.INTERSECTION:
        return forward & backward
    return forward | backward


def segment_motion(fwd: FlowField, bwd: Optional[FlowField], mode: FlowMaskMode) -> BinaryMask:
    """Joint motion mask of thresholded forward and backward flow.

    Args:
        fwd: Flow from frame t to t+1
        bwd: Flow from frame t to t-1; may be None only in forward-only mode
        mode: Combination rule

    Returns:
        Motion mask for frame t

    Raises:
        DimensionMismatchError: if the fields differ in size
        ConfigError: if bwd is missing in a mode that needs it
    """
    mode = FlowMaskMode.parse(mode)
    if bwd is None:
        if mode is not FlowMaskMode.FORWARD_ONLY:
            raise ConfigError(f"{mode.value} mode needs a backward flow field")
        return flow_mask(fwd)
    if fwd.shape != bwd.shape:
        raise DimensionMismatchError("backward flow", fwd.shape, bwd.shape)
    return combine_masks(flow_mask(fwd), flow_mask(bwd), mode)


def _warp_pixels(pixels: np.ndarray, flow: FlowField) -> np.ndarray:
    """Sample every channel at (row + v, col + u) with bilinear interpolation."""
    h, w = flow.shape
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    coords = [rows + flow.v, cols + flow.u]
    return np.stack(
        [ndimage.map_coordinates(pixels[..., c], coords, order=1, mode="nearest") for c in range(pixels.shape[2])],
        axis=-1,
    )


def static_mask(cur: Frame, other: Frame, flow: FlowField, moving: BinaryMask,
                tolerance: Optional[float] = None, margin: Optional[float] = None) -> BinaryMask:
    """Pixels of `cur` that stay put between `cur` and `other`.

    A pixel is static when its color is unchanged at the same place in
    `other` and the flow does not explain it: either the flow mask leaves
    it out, or warping `other` along the flow matches worse than not moving
    at all. Residuals are mean absolute channel differences; the comparison
    is median-filtered over 3x3 so single noisy pixels do not decide it.

    Args:
        cur: Frame t
        other: Frame t+1 or t-1
        flow: Flow from cur to other
        moving: Otsu mask of that flow
        tolerance: Largest residual of an unchanged pixel (default from config)
        margin: How much worse the warped residual must be (default from config)

    Returns:
        Mask of static pixels
    """
    if tolerance is None:
        tolerance = config.STATIC_TOLERANCE
    if margin is None:
        margin = config.STATIC_MARGIN
    if cur.shape != other.shape:
        raise DimensionMismatchError("neighbor frame", cur.shape, other.shape)
    if flow.shape != cur.shape:
        raise DimensionMismatchError("flow field", cur.shape, flow.shape)
    a = cur.pixels.astype(np.float64)
    b = other.pixels.astype(np.float64)
    still = np.abs(b - a).mean(axis=-1)
    warped = np.abs(_warp_pixels(b, flow) - a).mean(axis=-1)
    worse = ndimage.median_filter(warped - still, size=3, mode="nearest") > margin
    return BinaryMask((still <= tolerance) & (~moving.bits | worse))


@dataclass(frozen=True)
class MotionMasks:
    """Forward and backward motion masks of one frame (either may be None).

    `static` marks pixels that stay put in at least one direction; it is
    None when the masks were built from flow fields alone.
    """

    forward: Optional[BinaryMask]
    backward: Optional[BinaryMask]
    static: Optional[BinaryMask] = None

    def combine(self, mode: FlowMaskMode, drop_static: bool = False) -> BinaryMask:
        mask = combine_masks(self.forward, self.backward, FlowMaskMode.parse(mode))
        if drop_static and self.static is not None:
            mask = mask.difference(self.static)
        return mask


def frame_motion(estimator: FlowEstimator, prev: Optional[Frame], cur: Frame,
                 nxt: Optional[Frame]) -> MotionMasks:
    """Motion masks of frame `cur` from its neighbors (either may be None)."""
    forward = backward = static = None
    for other, side in ((nxt, "forward"), (prev, "backward")):
        if other is None:
            continue
        if other.shape != cur.shape:
            raise DimensionMismatchError("neighbor frame", cur.shape, other.shape)
        flow = estimator.estimate(cur, other)
        moving = flow_mask(flow)
        still = static_mask(cur, other, flow, moving)
        static = still if static is None else static | still
        if side == "forward":
            forward = moving
        else:
            backward = moving
    if forward is None and backward is None:
        raise ValueError("at least one neighbor frame is required")
    return MotionMasks(forward, backward, static)


def _triple_motion(task: tuple) -> MotionMasks:
    prev, cur, nxt, params = task
    return frame_motion(get_estimator(params), prev, cur, nxt)


def segment_sequence(frames: Sequence[Frame], params: Optional[FlowParams] = None,
                     workers: int = 1) -> list[MotionMasks]:
    """Forward and backward motion masks for every frame of a sequence.

    The first frame has no backward mask and the last no forward mask, so
    combining falls back to the available side.

    Args:
        frames: At least two frames of equal size
        params: Flow solver parameters (default from config)
        workers: Processes estimating frames in parallel

    Returns:
        One MotionMasks per frame
    """
    if len(frames) < 2:
        raise SequenceTooShortError(f"motion segmentation needs at least 2 frames, got {len(frames)}")
    params = params or FlowParams.from_config()
    estimator = get_estimator(params)

    if workers > 1:
        tasks = [(prev, cur, nxt, params) for prev, cur, nxt in sliding_triples(frames)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            masks = list(pool.map(_triple_motion, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        masks = []
        for index, (prev, cur, nxt) in enumerate(sliding_triples(frames)):
            masks.append(frame_motion(estimator, prev, cur, nxt))
            logger.debug(f"Motion masks for frame {index} computed")
    logger.info(f"Segmented motion in {len(frames)} frames")
    return masks


# Convenience function
def combine_sequence(masks: Sequence[MotionMasks], mode: FlowMaskMode,
                     drop_static: bool = False) -> list[BinaryMask]:
    """Apply one combination mode to every frame of a segmented sequence."""
    return [m.combine(mode, drop_static) for m in masks]
