"""
Composition of robot-arm training samples.

Harvested arm cut-outs are pasted onto unrelated backgrounds at a random
scale and horizontal shift, and an occluding object is pasted at the gripper
spot to emulate a grasp. Occluder pixels are labeled background, so a model
trained on the samples learns to separate the arm from whatever it holds.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from config import config
from errors import CompositionError, DataError, EmptyMaskError
from imaging.io import read_gray, read_png, write_gray, write_png
from imaging.morphology import connected_components, dilate
from imaging.raster import BinaryMask, Frame
from robot_model.gripper import GripperSpot

logger = logging.getLogger(__name__)

LABEL_BACKGROUND = 0
LABEL_ROBOT = 1
LABEL_IGNORE = 2

# Gray levels used when a label raster is written to disk
LABEL_GRAY = {LABEL_BACKGROUND: 0, LABEL_IGNORE: 128, LABEL_ROBOT: 255}


@dataclass(frozen=True)
class ComposeConfig:
    """Parameters of training-sample composition."""

    scale_range: tuple = (0.8, 1.2)
    shift_fraction: float = 0.1  # of the image width, both directions
    weight_sigma: float = 50.0  # pixels
    weight_peak: float = 3.0
    ignore_band: int = 2  # pixels outside the arm mask
    jitter_range: tuple = (0.7, 1.3)
    blue_bias: float = 0.0  # widens the blue jitter range upward
    max_tries: int = 10
    count: int = 500
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise ValueError("scale_range must satisfy 0 < low <= high")
        if self.shift_fraction < 0:
            raise ValueError("shift_fraction must not be negative")
        if self.weight_sigma <= 0 or self.weight_peak < 1:
            raise ValueError("weight_sigma must be positive and weight_peak at least 1")
        if self.ignore_band < 0:
            raise ValueError("ignore_band must not be negative")
        if self.max_tries < 1 or self.count < 0:
            raise ValueError("max_tries must be positive and count non-negative")

    @classmethod
    def from_config(cls, **overrides) -> "ComposeConfig":
        values = {
            "weight_sigma": config.WEIGHT_SIGMA,
            "weight_peak": config.WEIGHT_PEAK,
            "count": config.TRAIN_SAMPLES,
        }
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ComposeConfig":
        """Inverse of to_dict; JSON lists become the tuple ranges again."""
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


@dataclass(frozen=True, eq=False)
class TrainingSample:
    """Composite frame with its 3-class label raster and loss weight map."""

    composite: Frame
    label: np.ndarray  # uint8, LABEL_* values
    weight_map: np.ndarray  # float, >= 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        label = np.array(self.label, dtype=np.uint8, copy=True)
        weights = np.array(self.weight_map, dtype=np.float64, copy=True)
        if label.shape != self.composite.shape or weights.shape != self.composite.shape:
            raise ValueError("label and weight map must match the composite dimensions")
        if not np.isin(label, list(LABEL_GRAY)).all():
            raise ValueError("label raster holds unknown classes")
        if np.any(weights < 1.0 - 1e-6):
            raise ValueError("weight map must be at least 1 everywhere")
        label.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "weight_map", weights)

    def robot_mask(self) -> BinaryMask:
        return BinaryMask(self.label == LABEL_ROBOT)


def gripper_weight_map(shape: tuple, center: tuple, sigma: float, peak: float) -> np.ndarray:
    """1 + (peak - 1) * exp(-d^2 / (2 sigma^2)), d = distance to center."""
    rows, cols = np.indices(shape, dtype=np.float64)
    d2 = (rows - center[0]) ** 2 + (cols - center[1]) ** 2
    return 1.0 + (peak - 1.0) * np.exp(-d2 / (2.0 * sigma ** 2))


def _fit_background(background: Frame, shape: tuple) -> np.ndarray:
    if background.shape == shape:
        return background.pixels.copy()
    img = Image.fromarray(np.ascontiguousarray(background.pixels))
    return np.asarray(img.resize((shape[1], shape[0]), Image.BILINEAR)).copy()


def _paste_affine(array: np.ndarray, scale: float, shift: float) -> np.ndarray:
    """Nearest-neighbor scaling about the image center plus a column shift."""
    h, w = array.shape[:2]
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    rows, cols = np.indices((h, w), dtype=np.float64)
    src = [cr + (rows - cr) / scale, cc + (cols - cc - shift) / scale]
    if array.ndim == 2:
        return ndimage.map_coordinates(array, src, order=0, mode="constant", cval=0)
    return np.stack(
        [ndimage.map_coordinates(array[..., k], src, order=0, mode="constant", cval=0)
         for k in range(array.shape[2])],
        axis=-1,
    )


def _jitter(pixels: np.ndarray, rng: np.random.Generator, cfg: ComposeConfig) -> np.ndarray:
    lo, hi = cfg.jitter_range
    gains = rng.uniform(lo, hi, size=3)
    if cfg.blue_bias > 0:
        gains[2] = rng.uniform(lo, hi + cfg.blue_bias)
    return np.clip(pixels.astype(np.float64) * gains, 0, 255).astype(np.uint8)


def _occluder_patch(occluder: tuple) -> tuple:
    frame, mask = occluder
    if mask.is_empty():
        raise EmptyMaskError("occluder mask is empty")
    mask.require_same_shape(frame, "occluder mask")
    rows, cols = np.nonzero(mask.bits)
    r0, r1, c0, c1 = rows.min(), rows.max() + 1, cols.min(), cols.max() + 1
    return frame.pixels[r0:r1, c0:c1], mask.bits[r0:r1, c0:c1]


def compose_training_sample(arm_cut: tuple, background: Frame, occluder: tuple, spot: GripperSpot,
                            rng_seed, cfg: Optional[ComposeConfig] = None) -> TrainingSample:
    """Paste an arm cut-out and an occluder onto a background.

    Args:
        arm_cut: (frame, arm mask) from harvesting
        background: Background frame, resized to the arm frame when needed
        occluder: (frame, mask) of the object emulating a grasp
        spot: Gripper spot of the arm cut's pose
        rng_seed: Seed (int or sequence) of the sample's random draws
        cfg: Composition parameters (default from config)

    Returns:
        TrainingSample

    Raises:
        CompositionError: if no placement keeps the occluder inside the frame
    """
    cfg = cfg or ComposeConfig.from_config()
    arm_frame, arm_mask = arm_cut
    arm_mask.require_same_shape(arm_frame, "arm mask")
    spot.mask.require_same_shape(arm_frame, "gripper spot")
    shape = arm_frame.shape
    h, w = shape
    base = _fit_background(background, shape)
    occ_pixels, occ_bits = _occluder_patch(occluder)
    oh, ow = occ_bits.shape

    rng = np.random.default_rng(rng_seed)
    for attempt in range(cfg.max_tries):
        scale = rng.uniform(*cfg.scale_range)
        shift = rng.uniform(-cfg.shift_fraction, cfg.shift_fraction) * w
        arm = _paste_affine(arm_mask.bits.astype(np.uint8), scale, shift).astype(bool)
        pixels = _paste_affine(arm_frame.pixels, scale, shift)
        spot_bits = _paste_affine(spot.mask.bits.astype(np.uint8), scale, shift).astype(bool)
        center = ((h - 1) / 2.0 + scale * (spot.center[0] - (h - 1) / 2.0),
                  (w - 1) / 2.0 + scale * (spot.center[1] - (w - 1) / 2.0) + shift)

        jaws = sorted(connected_components(BinaryMask(spot_bits)), key=lambda c: (-c.area, c.label))
        if len(jaws) == 2:
            anchor = center
        elif jaws:
            pick = np.argwhere(spot_bits)[rng.integers(len(np.argwhere(spot_bits)))]
            anchor = (float(pick[0]), float(pick[1]))
        else:
            logger.debug(f"Attempt {attempt}: gripper spot left the frame")
            continue

        top = int(round(anchor[0] - oh / 2.0))
        left = int(round(anchor[1] - ow / 2.0))
        if top < 0 or left < 0 or top + oh > h or left + ow > w:
            logger.debug(f"Attempt {attempt}: occluder at ({top}, {left}) leaves the frame")
            continue

        composite = base.copy()
        composite[arm] = pixels[arm]
        label = np.full(shape, LABEL_BACKGROUND, dtype=np.uint8)
        label[arm] = LABEL_ROBOT

        occ = np.zeros(shape, dtype=bool)
        occ[top:top + oh, left:left + ow] = occ_bits
        jittered = _jitter(occ_pixels, rng, cfg)
        composite[top:top + oh, left:left + ow][occ_bits] = jittered[occ_bits]
        label[occ] = LABEL_BACKGROUND

        if len(jaws) == 2:
            # the larger jaw is nearer the camera and covers the object
            front = jaws[0].to_mask(shape).bits & arm & occ
            composite[front] = pixels[front]
            label[front] = LABEL_ROBOT

        if cfg.ignore_band > 0:
            robot = label == LABEL_ROBOT
            band = dilate(robot, cfg.ignore_band) & ~robot & ~occ
            label[band] = LABEL_IGNORE

        weights = gripper_weight_map(shape, center, cfg.weight_sigma, cfg.weight_peak)
        return TrainingSample(
            composite=Frame(composite),
            label=label,
            weight_map=weights,
            meta={"scale": float(scale), "shift": float(shift), "spot_center": list(center),
                  "pose_id": spot.pose_id, "occluder_box": [top, left, oh, ow]},
        )

    raise CompositionError(f"no valid occluder placement after {cfg.max_tries} tries")


def build_training_set(cuts: Sequence[tuple], backgrounds: Sequence[Frame], occluders: Sequence[tuple],
                       cfg: Optional[ComposeConfig] = None) -> list[TrainingSample]:
    """Draw cfg.count composed samples.

    Args:
        cuts: (frame, arm mask, gripper spot) triples
        backgrounds: Background frames
        occluders: (frame, mask) occluder cut-outs
        cfg: Composition parameters; cfg.seed fixes every draw

    Returns:
        List of TrainingSample
    """
    cfg = cfg or ComposeConfig.from_config()
    if not cuts or not backgrounds or not occluders:
        raise DataError("composition needs arm cuts, backgrounds and occluders")

    picker = np.random.default_rng([cfg.seed, 0])
    samples = []
    skipped = 0
    for k in range(cfg.count):
        frame, mask, spot = cuts[picker.integers(len(cuts))]
        background = backgrounds[picker.integers(len(backgrounds))]
        occluder = occluders[picker.integers(len(occluders))]
        try:
            samples.append(compose_training_sample((frame, mask), background, occluder, spot,
                                                   rng_seed=[cfg.seed, 1, k], cfg=cfg))
        except CompositionError as e:
            skipped += 1
            logger.warning(f"Sample {k} skipped: {e}")
    if skipped:
        logger.warning(f"{skipped} of {cfg.count} samples could not be composed")
    logger.info(f"Composed {len(samples)} training samples")
    return samples


# Convenience functions for the on-disk format

def write_weight_map(weights: np.ndarray, path) -> None:
    """Write a weight map: uint32 LE width and height, then float32 LE values."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    h, w = weights.shape
    with open(path, "wb") as f:
        f.write(np.array([w, h], dtype="<u4").tobytes())
        f.write(np.ascontiguousarray(weights, dtype="<f4").tobytes())


def read_weight_map(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise DataError(f"{path}: truncated weight map header")
    w, h = (int(x) for x in np.frombuffer(data, dtype="<u4", count=2))
    if len(data) != 8 + 4 * w * h:
        raise DataError(f"{path}: expected {w}x{h} weights, file holds {len(data) - 8} payload bytes")
    return np.frombuffer(data, dtype="<f4", offset=8).reshape(h, w).astype(np.float64)


def label_to_gray(label: np.ndarray) -> np.ndarray:
    gray = np.zeros(label.shape, dtype=np.uint8)
    for cls, value in LABEL_GRAY.items():
        gray[label == cls] = value
    return gray


def gray_to_label(gray: np.ndarray) -> np.ndarray:
    label = np.full(gray.shape, 255, dtype=np.uint8)
    for cls, value in LABEL_GRAY.items():
        label[gray == value] = cls
    if np.any(label == 255):
        raise DataError("label image holds gray levels other than 0, 128 and 255")
    return label


def export_training_samples(samples: Sequence[TrainingSample], out_dir) -> Path:
    """Write composite PNGs, label PGMs, weight maps and a manifest.

    Returns:
        Path of the manifest JSON
    """
    out = Path(out_dir)
    entries = []
    for i, sample in enumerate(samples):
        names = {
            "composite": f"composite/{i:06d}.png",
            "label": f"label/{i:06d}.pgm",
            "weight": f"weight/{i:06d}.bin",
        }
        write_png(sample.composite, out / names["composite"])
        write_gray(label_to_gray(sample.label), out / names["label"])
        write_weight_map(sample.weight_map, out / names["weight"])
        entries.append({**names, "meta": sample.meta})

    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({"count": len(entries), "samples": entries}, indent=2))
    logger.info(f"Exported {len(entries)} training samples to {out}")
    return manifest


def load_training_samples(manifest_path) -> list[TrainingSample]:
    """Read samples written by export_training_samples."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read manifest {manifest_path}: {e}") from e
    root = manifest_path.parent
    samples = []
    for entry in manifest["samples"]:
        samples.append(TrainingSample(
            composite=read_png(root / entry["composite"]),
            label=gray_to_label(read_gray(root / entry["label"])),
            weight_map=read_weight_map(root / entry["weight"]),
            meta=entry.get("meta", {}),
        ))
    return samples
