"""
Color-histogram appearance model of the robot arm.

The model is fit on self-harvested arm masks from object-free motion and then
classifies every pixel of a new frame by Bayes' rule over two RGB histograms,
one for arm pixels and one for everything else.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from config import config
from errors import EmptyMaskError
from imaging.morphology import morph_open_close
from imaging.raster import BinaryMask, Frame

logger = logging.getLogger(__name__)


def color_bins(frame: Frame, bins: int) -> np.ndarray:
    """Flat histogram bin index of every pixel, as an H x W int array."""
    step = 256 // bins
    q = frame.pixels.astype(np.int64) // step
    return (q[..., 0] * bins + q[..., 1]) * bins + q[..., 2]


@dataclass(frozen=True, eq=False)
class ArmAppearanceModel:
    """Normalized foreground/background RGB histograms plus the arm prior."""

    foreground: np.ndarray  # bins^3 probabilities
    background: np.ndarray
    prior: float
    trained_on: int
    bins: int = 16

    def __post_init__(self):
        size = self.bins ** 3
        for name in ("foreground", "background"):
            hist = np.array(getattr(self, name), dtype=np.float64, copy=True).ravel()
            if hist.shape != (size,):
                raise ValueError(f"{name} histogram needs {size} bins, got {hist.shape}")
            if np.any(hist < 0) or not np.isclose(hist.sum(), 1.0, rtol=0, atol=1e-9):
                raise ValueError(f"{name} histogram must be a probability distribution")
            hist.setflags(write=False)
            object.__setattr__(self, name, hist)
        if not 0.0 < self.prior < 1.0:
            raise ValueError(f"prior must lie in (0, 1), got {self.prior}")

    def posterior(self, frame: Frame) -> np.ndarray:
        """P(robot | color) for every pixel of a frame."""
        idx = color_bins(frame, self.bins)
        fg = self.prior * self.foreground[idx]
        bg = (1.0 - self.prior) * self.background[idx]
        return fg / (fg + bg)

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "prior": self.prior,
            "trained_on": self.trained_on,
            "foreground": self.foreground.tolist(),
            "background": self.background.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArmAppearanceModel":
        return cls(
            foreground=np.asarray(data["foreground"]),
            background=np.asarray(data["background"]),
            prior=float(data["prior"]),
            trained_on=int(data["trained_on"]),
            bins=int(data["bins"]),
        )


def _finish(fg_sum: np.ndarray, bg_sum: np.ndarray, fg_mass: float, bg_mass: float,
            count: int, bins: int) -> ArmAppearanceModel:
    if fg_mass <= 0:
        raise EmptyMaskError("every training mask is empty")
    if bg_mass <= 0:
        raise EmptyMaskError("training masks leave no background pixels")
    # add-one smoothing on a common basis: the mean sample mass
    basis = (fg_mass + bg_mass) / count
    fg = fg_sum / fg_sum.sum() * basis + 1.0
    bg = bg_sum / bg_sum.sum() * basis + 1.0
    model = ArmAppearanceModel(
        foreground=fg / fg.sum(),
        background=bg / bg.sum(),
        prior=fg_mass / (fg_mass + bg_mass),
        trained_on=count,
        bins=bins,
    )
    logger.info(f"Fit appearance model on {count} samples (prior {model.prior:.3f})")
    return model


def fit_appearance(samples: Iterable[tuple], bins: Optional[int] = None) -> ArmAppearanceModel:
    """Fit the model on (frame, arm mask) pairs.

    Args:
        samples: Frames with their self-harvested arm masks
        bins: Histogram bins per channel (default from config)

    Returns:
        Fitted ArmAppearanceModel

    Raises:
        EmptyMaskError: if there are no samples or every mask is empty
    """
    bins = bins or config.HISTOGRAM_BINS
    size = bins ** 3
    fg_sum = np.zeros(size)
    bg_sum = np.zeros(size)
    fg_mass = bg_mass = 0.0
    count = 0
    for frame, mask in samples:
        mask.require_same_shape(frame, "appearance sample mask")
        idx = color_bins(frame, bins)
        fg_sum += np.bincount(idx[mask.bits], minlength=size)
        bg_sum += np.bincount(idx[~mask.bits], minlength=size)
        fg_mass += mask.area
        bg_mass += mask.bits.size - mask.area
        count += 1
    if count == 0:
        raise EmptyMaskError("no training samples")
    return _finish(fg_sum, bg_sum, fg_mass, bg_mass, count, bins)


def fit_appearance_weighted(samples: Sequence, use_weights: bool = True,
                            bins: Optional[int] = None) -> ArmAppearanceModel:
    """Fit the model on composed training samples.

    Robot-labeled pixels feed the foreground histogram and background-labeled
    pixels (pasted occluders included) the background one; ignore-labeled
    pixels are skipped. Each pixel counts with its weight-map value, or 1
    when use_weights is False.

    Args:
        samples: TrainingSample instances
        use_weights: Apply the gripper weight map
        bins: Histogram bins per channel (default from config)

    Returns:
        Fitted ArmAppearanceModel
    """
    from robot_model.compose import LABEL_BACKGROUND, LABEL_ROBOT

    bins = bins or config.HISTOGRAM_BINS
    size = bins ** 3
    fg_sum = np.zeros(size)
    bg_sum = np.zeros(size)
    fg_mass = bg_mass = 0.0
    count = 0
    for sample in samples:
        idx = color_bins(sample.composite, bins)
        weights = sample.weight_map if use_weights else np.ones(sample.label.shape)
        robot = sample.label == LABEL_ROBOT
        background = sample.label == LABEL_BACKGROUND
        fg_sum += np.bincount(idx[robot], weights=weights[robot], minlength=size)
        bg_sum += np.bincount(idx[background], weights=weights[background], minlength=size)
        fg_mass += float(weights[robot].sum())
        bg_mass += float(weights[background].sum())
        count += 1
    if count == 0:
        raise EmptyMaskError("no training samples")
    return _finish(fg_sum, bg_sum, fg_mass, bg_mass, count, bins)


def predict_robot_mask(model: ArmAppearanceModel, frame: Frame, threshold: float = 0.5) -> BinaryMask:
    """Pixels whose robot posterior exceeds the threshold, cleaned by open/close.

    Args:
        model: Fitted appearance model
        frame: Frame to classify
        threshold: Decision threshold on the posterior

    Returns:
        Robot arm mask
    """
    raw = BinaryMask(model.posterior(frame) > threshold)
    return morph_open_close(raw, radius=1)
