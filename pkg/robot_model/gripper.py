"""
Gripper spot detection from an open/close pair at a fixed arm pose.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from errors import DataError, DimensionMismatchError, EmptyMaskError
from imaging.io import read_mask, write_mask
from imaging.morphology import connected_components, mask_from_components
from imaging.raster import BinaryMask, Frame
from imaging.threshold import otsu_mask
from optical_flow.estimators import estimate_flow
from optical_flow.field import FlowParams, flow_magnitude

logger = logging.getLogger(__name__)

# A second jaw component is kept only if it is at least this fraction of the largest
SECOND_JAW_MIN_RATIO = 0.2


@dataclass(frozen=True)
class GripperSpot:
    """Image region of jaw motion at one trajectory pose."""

    pose_id: int
    mask: BinaryMask
    center: tuple  # (row, col)

    def __post_init__(self):
        if self.mask.is_empty():
            raise EmptyMaskError(f"gripper spot {self.pose_id} has an empty mask")
        rows, cols = np.nonzero(self.mask.bits)
        r, c = self.center
        if not (rows.min() <= r <= rows.max() and cols.min() <= c <= cols.max()):
            raise ValueError(f"gripper spot center {self.center} lies outside its mask bbox")
        object.__setattr__(self, "center", (float(r), float(c)))

    @classmethod
    def from_mask(cls, pose_id: int, mask: BinaryMask) -> "GripperSpot":
        if mask.is_empty():
            raise EmptyMaskError(f"gripper spot {pose_id} has an empty mask")
        return cls(pose_id=pose_id, mask=mask, center=mask.centroid())

    def to_dict(self) -> dict:
        return {"pose_id": self.pose_id, "center": list(self.center), "area": self.mask.area}


def detect_gripper_spot(open_frame: Frame, closed_frame: Frame, params: Optional[FlowParams] = None,
                        pose_id: int = 0) -> GripperSpot:
    """Locate the jaws from the motion between an open and a closed gripper.

    Args:
        open_frame: Frame with the gripper open
        closed_frame: Frame at the same pose with the gripper closed
        params: Flow solver parameters (default from config)
        pose_id: Trajectory index the spot belongs to

    Returns:
        GripperSpot of the one or two largest motion components

    Raises:
        EmptyMaskError: if no jaw motion is visible
    """
    if open_frame.shape != closed_frame.shape:
        raise DimensionMismatchError("gripper frames", open_frame.shape, closed_frame.shape)

    motion = otsu_mask(flow_magnitude(estimate_flow(open_frame, closed_frame, params)))
    components = sorted(connected_components(motion), key=lambda c: (-c.area, c.label))
    if not components:
        raise EmptyMaskError(f"no jaw motion detected at pose {pose_id}")

    jaws = components[:1]
    if len(components) > 1 and components[1].area >= SECOND_JAW_MIN_RATIO * components[0].area:
        jaws.append(components[1])
    logger.debug(f"Pose {pose_id}: {len(jaws)} jaw component(s) from {len(components)}")
    return GripperSpot.from_mask(pose_id, mask_from_components(jaws, motion.shape))


def _spot_or_none(task: tuple) -> Optional[GripperSpot]:
    opened, closed, params, pose_id = task
    try:
        return detect_gripper_spot(opened, closed, params, pose_id=pose_id)
    except EmptyMaskError:
        return None


def detect_spots(pairs: Sequence[tuple], params: Optional[FlowParams] = None, workers: int = 1) -> dict:
    """Gripper spot of every pose from its (open, closed) pair.

    A pose without visible jaw motion reuses the spot of the previous pose;
    poses before the first detection take the first detected spot.

    Args:
        pairs: (open, closed) frames per pose
        params: Flow solver parameters (default from config)
        workers: Processes detecting poses in parallel

    Raises:
        EmptyMaskError: if no pose shows jaw motion
    """
    tasks = [(opened, closed, params, i) for i, (opened, closed) in enumerate(pairs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            detected = list(pool.map(_spot_or_none, tasks))
    else:
        detected = [_spot_or_none(task) for task in tasks]

    spots = {}
    last: Optional[GripperSpot] = None
    for i, spot in enumerate(detected):
        if spot is None:
            logger.warning(f"No jaw motion at pose {i}, reusing the previous spot")
        else:
            last = spot
        if last is not None:
            spots[i] = last
    if not spots:
        raise EmptyMaskError("no jaw motion at any pose")
    first = min(spots)
    for i in range(first):
        spots[i] = spots[first]
    return spots


# Convenience functions
def write_spots(spots: dict, directory) -> None:
    """One PGM mask per pose, named by pose index."""
    for index, spot in spots.items():
        write_mask(spot.mask, Path(directory) / f"{index:06d}.pgm")


def read_spots(directory) -> dict:
    """Spots written by write_spots, keyed by pose index."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"spot directory not found: {directory}")
    return {int(p.stem): GripperSpot.from_mask(int(p.stem), read_mask(p)) for p in sorted(directory.glob("*.pgm"))}
