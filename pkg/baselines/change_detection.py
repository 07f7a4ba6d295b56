"""
Change-detection baselines on pose-paired recordings with and without an object.
"""
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from config import config
from errors import DimensionMismatchError
from imaging.morphology import morph_open_close
from imaging.raster import BinaryMask, Frame
from object_segmentation.pipeline import PostProcessConfig, postprocess
from robot_model.gripper import GripperSpot


@dataclass(frozen=True)
class CdRgbConfig:
    """RGB change detection: |difference| > pixel_range / divisor, then open/close."""

    pixel_range: float = 255.0
    divisor: float = 25.0
    morph_radius: int = 1
    morph_iterations: int = 1

    def __post_init__(self):
        if self.pixel_range <= 0 or self.divisor <= 0:
            raise ValueError("pixel_range and divisor must be positive")
        if self.morph_radius < 1 or self.morph_iterations < 0:
            raise ValueError("morph_radius must be at least 1 and morph_iterations non-negative")

    @property
    def threshold(self) -> float:
        return self.pixel_range / self.divisor

    @classmethod
    def from_config(cls, **overrides) -> "CdRgbConfig":
        values = {"divisor": config.CD_RGB_DIVISOR, "morph_radius": config.MORPH_RADIUS}
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CdRgbConfig":
        return cls(**data)


def change_mask(with_object: Frame, without_object: Frame, threshold: float) -> BinaryMask:
    """Pixels whose largest per-channel absolute difference exceeds the threshold."""
    if with_object.shape != without_object.shape:
        raise DimensionMismatchError("paired frame", with_object.shape, without_object.shape)
    diff = np.abs(with_object.pixels.astype(np.int16) - without_object.pixels.astype(np.int16))
    return BinaryMask(diff.max(axis=2) > threshold)


def cd_rgb(with_object: Frame, without_object: Frame, cfg: Optional[CdRgbConfig] = None) -> BinaryMask:
    """RGB change detection between frames taken at the same robot pose.

    Args:
        with_object: Frame with the grasped object
        without_object: Frame at the same pose without it
        cfg: Threshold and morphology settings (default from config)

    Returns:
        Changed-pixel mask after morphological open/close
    """
    cfg = cfg or CdRgbConfig.from_config()
    mask = change_mask(with_object, without_object, cfg.threshold)
    if cfg.morph_iterations == 0:
        return mask
    return morph_open_close(mask, radius=cfg.morph_radius, iterations=cfg.morph_iterations)


def cd_of(flow_mask_with: BinaryMask, flow_mask_without: BinaryMask, spot: Optional[GripperSpot],
          cfg: Optional[PostProcessConfig] = None) -> BinaryMask:
    """Change detection between pose-paired motion masks, then post-processing.

    Args:
        flow_mask_with: Motion mask of the recording with the object
        flow_mask_without: Motion mask of the object-free recording
        spot: Gripper spot of the pose
        cfg: Post-processing configuration (default from config)

    Returns:
        Object mask
    """
    cfg = cfg or PostProcessConfig.from_config()
    return postprocess(flow_mask_with.difference(flow_mask_without), spot, cfg)
