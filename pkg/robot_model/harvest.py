"""
Self-supervised harvesting of arm masks from object-free motion sequences.
"""
import logging
from typing import Optional, Sequence

from config import config
from errors import SequenceTooShortError
from flow_segmentation.motion import FlowMaskMode, segment_sequence
from imaging.raster import Frame
from optical_flow.field import FlowParams

logger = logging.getLogger(__name__)

MIN_SEQUENCE_LENGTH = 3


def harvest_arm_masks_indexed(sequence: Sequence[Frame], params: Optional[FlowParams] = None,
                              min_fraction: Optional[float] = None, workers: int = 1) -> list[tuple]:
    """Union motion masks, static pixels dropped, of an arm moving without an object.

    Args:
        sequence: Frames of the moving arm, at least three
        params: Flow solver parameters (default from config)
        min_fraction: Minimum mask area as a fraction of the image (default from config)
        workers: Processes estimating flow in parallel

    Returns:
        (index, frame, mask) for every frame whose mask is large enough
    """
    if len(sequence) < MIN_SEQUENCE_LENGTH:
        raise SequenceTooShortError(
            f"harvesting needs at least {MIN_SEQUENCE_LENGTH} frames, got {len(sequence)}"
        )
    if min_fraction is None:
        min_fraction = config.HARVEST_MIN_FRACTION

    harvested = []
    for index, (frame, motion) in enumerate(zip(sequence, segment_sequence(sequence, params, workers))):
        mask = motion.combine(FlowMaskMode.UNION, drop_static=True)
        if mask.area < min_fraction * mask.bits.size:
            logger.debug(f"Frame {index} discarded: mask area {mask.area} below {min_fraction:.1%}")
            continue
        harvested.append((index, frame, mask))

    logger.info(f"Harvested {len(harvested)} of {len(sequence)} frames")
    return harvested


def harvest_arm_masks(sequence: Sequence[Frame], params: Optional[FlowParams] = None,
                      min_fraction: Optional[float] = None) -> list[tuple]:
    """(frame, arm mask) pairs harvested from an object-free motion sequence."""
    return [(frame, mask) for _, frame, mask in harvest_arm_masks_indexed(sequence, params, min_fraction)]
