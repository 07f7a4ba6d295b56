"""
Grasped-object segmentation: motion minus robot, then component filters.

The post-processing filters run in a fixed order (border deletion, gripper
distance, minimum area) and each one removes whole connected components.
"""
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from config import config
from errors import ConfigError, DimensionMismatchError
from flow_segmentation.motion import FlowMaskMode, MotionMasks, frame_motion, segment_sequence
from imaging.morphology import connected_components, mask_from_components
from imaging.raster import BinaryMask, Frame
from optical_flow.estimators import get_estimator
from optical_flow.field import FlowParams
from robot_model.appearance import ArmAppearanceModel, predict_robot_mask
from robot_model.gripper import GripperSpot

logger = logging.getLogger(__name__)


def nimply(motion: BinaryMask, robot: BinaryMask) -> BinaryMask:
    """Pixels in motion that are not robot: motion AND NOT robot."""
    if motion.shape != robot.shape:
        raise DimensionMismatchError("robot mask", motion.shape, robot.shape)
    return motion.difference(robot)


@dataclass(frozen=True)
class PostProcessConfig:
    """Post-processing filters and their thresholds at the reference resolution."""

    border_deletion: bool = True
    distance_filter: bool = True
    area_filter: bool = True
    gripper_max_dist: float = 100.0
    min_area: float = 2500.0
    flow_mode: FlowMaskMode = FlowMaskMode.UNION
    static_suppression: bool = True
    lenient_closest: bool = False
    scale_to_resolution: bool = True
    reference_shape: tuple = (414, 736)

    def __post_init__(self):
        if self.gripper_max_dist <= 0:
            raise ConfigError("gripper_max_dist must be positive")
        if self.min_area < 0:
            raise ConfigError("min_area must not be negative")
        object.__setattr__(self, "flow_mode", FlowMaskMode.parse(self.flow_mode))

    @classmethod
    def from_config(cls, **overrides) -> "PostProcessConfig":
        values = {
            "gripper_max_dist": config.GRIPPER_MAX_DIST,
            "min_area": config.MIN_MASK_AREA,
            "reference_shape": (config.REFERENCE_HEIGHT, config.REFERENCE_WIDTH),
        }
        values.update(overrides)
        return cls(**values)

    @classmethod
    def disabled(cls, **overrides) -> "PostProcessConfig":
        """All filters off: postprocess becomes the identity."""
        return cls(border_deletion=False, distance_filter=False, area_filter=False, **overrides)

    def with_mode(self, mode) -> "PostProcessConfig":
        return replace(self, flow_mode=FlowMaskMode.parse(mode))

    def thresholds(self, shape: tuple) -> tuple:
        """(max distance, min area) in pixels for an image of the given shape."""
        if not self.scale_to_resolution:
            return self.gripper_max_dist, self.min_area
        ratio = (shape[0] * shape[1]) / (self.reference_shape[0] * self.reference_shape[1])
        return self.gripper_max_dist * math.sqrt(ratio), self.min_area * ratio

    def to_dict(self) -> dict:
        return {
            "border_deletion": self.border_deletion,
            "distance_filter": self.distance_filter,
            "area_filter": self.area_filter,
            "gripper_max_dist": self.gripper_max_dist,
            "min_area": self.min_area,
            "flow_mode": self.flow_mode.value,
            "static_suppression": self.static_suppression,
            "lenient_closest": self.lenient_closest,
            "scale_to_resolution": self.scale_to_resolution,
            "reference_shape": list(self.reference_shape),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PostProcessConfig":
        values = dict(data)
        if "reference_shape" in values:
            values["reference_shape"] = tuple(values["reference_shape"])
        return cls(**values)


def object_candidates(motion: MotionMasks, robot: BinaryMask, cfg: PostProcessConfig) -> BinaryMask:
    """Raw object mask of one frame: combined motion, static pixels dropped, nimply robot."""
    return nimply(motion.combine(cfg.flow_mode, drop_static=cfg.static_suppression), robot)


def postprocess_with_stats(raw: BinaryMask, spot: Optional[GripperSpot], cfg: PostProcessConfig,
                           frame_id=None) -> tuple:
    """Apply the filters and report component statistics.

    Args:
        raw: Candidate object mask (nimply output)
        spot: Gripper spot of the frame's pose; required by the distance filter
        cfg: Filter configuration
        frame_id: Identifier copied into the statistics

    Returns:
        (mask, stats) where stats holds frame_id, component_count_raw,
        component_count_final, area_final and spot_distance
    """
    if cfg.distance_filter and spot is None:
        raise ConfigError("the gripper distance filter needs a gripper spot")
    if spot is not None:
        spot.mask.require_same_shape(raw, "gripper spot")

    max_dist, min_area = cfg.thresholds(raw.shape)
    components = connected_components(raw)
    raw_count = len(components)

    if cfg.border_deletion:
        components = [c for c in components if not c.touches_border]

    if cfg.distance_filter and components:
        distances = [c.min_distance_to(spot.center) for c in components]
        closest = min(range(len(components)), key=lambda i: (distances[i], components[i].label))
        components = [
            c for i, c in enumerate(components)
            if distances[i] <= max_dist or (cfg.lenient_closest and i == closest)
        ]

    if cfg.area_filter:
        components = [c for c in components if c.area >= min_area]

    mask = mask_from_components(components, raw.shape)
    spot_distance = None
    if spot is not None and components:
        spot_distance = min(c.min_distance_to(spot.center) for c in components)
    stats = {
        "frame_id": frame_id,
        "component_count_raw": raw_count,
        "component_count_final": len(components),
        "area_final": mask.area,
        "spot_distance": spot_distance,
    }
    return mask, stats


def postprocess(raw: BinaryMask, spot: Optional[GripperSpot], cfg: PostProcessConfig) -> BinaryMask:
    """Border deletion, gripper-distance and minimum-area filtering."""
    return postprocess_with_stats(raw, spot, cfg)[0]


def segment_object(prev: Optional[Frame], cur: Frame, next: Optional[Frame], model: ArmAppearanceModel,
                   spot: Optional[GripperSpot], params: Optional[FlowParams] = None,
                   cfg: Optional[PostProcessConfig] = None) -> BinaryMask:
    """Object mask of the middle frame of a triple.

    prev or next may be None at the ends of a sequence.
    """
    cfg = cfg or PostProcessConfig.from_config()
    for other in (prev, next):
        if other is not None and other.shape != cur.shape:
            raise DimensionMismatchError("neighbor frame", cur.shape, other.shape)
    motion = frame_motion(get_estimator(params), prev, cur, next)
    raw = object_candidates(motion, predict_robot_mask(model, cur), cfg)
    return postprocess(raw, spot, cfg)


def _spot_for(spots, index: int) -> Optional[GripperSpot]:
    if spots is None:
        return None
    if isinstance(spots, GripperSpot):
        return spots
    if isinstance(spots, dict):
        return spots.get(index)
    return spots[index]


def segment_sequence_objects(frames: Sequence[Frame], model: ArmAppearanceModel, spots,
                             params: Optional[FlowParams] = None, cfg: Optional[PostProcessConfig] = None,
                             motion: Optional[Sequence[MotionMasks]] = None, workers: int = 1) -> list[tuple]:
    """Run the object pipeline over a whole sequence.

    Args:
        frames: Sequence of at least two frames
        model: Fitted arm appearance model
        spots: One GripperSpot for all frames, a list indexed by frame, or a dict by pose id
        params: Flow solver parameters (default from config)
        cfg: Post-processing configuration (default from config)
        motion: Precomputed per-frame motion masks, reused instead of estimating flow
        workers: Processes estimating flow in parallel

    Returns:
        (mask, stats) per frame
    """
    cfg = cfg or PostProcessConfig.from_config()
    if motion is None:
        motion = segment_sequence(frames, params, workers)
    if len(motion) != len(frames):
        raise ValueError(f"{len(motion)} motion masks for {len(frames)} frames")

    results = []
    for index, (frame, masks) in enumerate(zip(frames, motion)):
        raw = object_candidates(masks, predict_robot_mask(model, frame), cfg)
        results.append(postprocess_with_stats(raw, _spot_for(spots, index), cfg, frame_id=index))
    kept = sum(1 for mask, _ in results if not mask.is_empty())
    logger.info(f"Object masks for {len(frames)} frames, {kept} nonempty")
    return results


# Convenience function
def write_sidecar(stats: dict, path) -> None:
    """Write per-frame statistics as JSON next to a mask."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(stats, indent=2))
