"""
Scene description for the synthetic recording setup.

Everything is stored in plain dataclasses that round-trip through JSON, so a
scene file fully determines a rendered dataset.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage
from skimage import draw

from config import config
from errors import ConfigError
from imaging.raster import BinaryMask, Frame
from trajectory.waypoints import EllipseSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CameraSpec:
    """Orthographic camera: image axes in world coordinates and a pixel scale."""

    width: int = 320
    height: int = 240
    pixels_per_meter: float = 200.0
    image_right: tuple = (1.0, 0.0, 0.0)
    image_up: tuple = (0.0, 1.0, 0.0)
    center: tuple = (0.0, 0.0, 0.0)  # world point imaged at the frame center

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("image size must be positive")
        if self.pixels_per_meter <= 0:
            raise ConfigError("pixels_per_meter must be positive")
        r, u = np.asarray(self.image_right, float), np.asarray(self.image_up, float)
        if not (np.isclose(np.linalg.norm(r), 1, atol=1e-9) and np.isclose(np.linalg.norm(u), 1, atol=1e-9)
                and abs(np.dot(r, u)) < 1e-9):
            raise ConfigError("image_right and image_up must be orthonormal")

    @property
    def direction(self) -> tuple:
        """Unit vector from the scene toward the camera."""
        return tuple(float(x) for x in np.cross(self.image_right, self.image_up))

    def project(self, point) -> tuple:
        """(row, col) of a world point."""
        p = np.asarray(point, dtype=np.float64) - np.asarray(self.center, dtype=np.float64)
        col = (self.width - 1) / 2.0 + self.pixels_per_meter * float(np.dot(p, self.image_right))
        row = (self.height - 1) / 2.0 - self.pixels_per_meter * float(np.dot(p, self.image_up))
        return row, col

    def in_frame(self, rc: tuple) -> bool:
        return 0 <= rc[0] <= self.height - 1 and 0 <= rc[1] <= self.width - 1


@dataclass(frozen=True)
class ArmSpec:
    """Planar two-link arm with a parallel gripper, lengths in meters."""

    shoulder: tuple = (-0.65, -0.55, 0.0)
    link_lengths: tuple = (0.65, 0.6)
    link_widths: tuple = (0.1, 0.08)
    link_colors: tuple = ((40, 70, 170), (40, 70, 170))
    palm_length: float = 0.06
    palm_width: float = 0.12
    jaw_length: float = 0.09
    jaw_width: float = 0.03
    jaw_overlap: float = 0.015  # how far each closed jaw reaches over the object edge
    gripper_color: tuple = (70, 70, 76)
    grasp_width: float = 0.28  # jaw gap of the empty gripper
    jaw_amplitude: float = 0.02  # outward jaw travel when opening

    def __post_init__(self):
        if len(self.link_lengths) < 2 or len(self.link_lengths) != len(self.link_widths):
            raise ConfigError("the arm needs at least two links with a width each")
        if len(self.link_colors) != len(self.link_lengths):
            raise ConfigError("every link needs a color")
        if min(self.link_lengths) <= 0 or min(self.link_widths) <= 0:
            raise ConfigError("link lengths and widths must be positive")
        if self.jaw_amplitude < 0:
            raise ConfigError("jaw_amplitude must not be negative")


@dataclass(frozen=True)
class ObjectSpec:
    """Procedural two-tone object sprite."""

    shape: str = "ellipse"  # ellipse, box, diamond, capsule
    size: tuple = (60, 70)  # (height, width) in pixels
    colors: tuple = ((200, 40, 40), (150, 25, 30))
    stripe: int = 7  # stripe period in pixels
    name: str = "object"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f"unknown object shape '{self.shape}' (expected one of: {', '.join(SHAPES)})")
        if min(self.size) < 4:
            raise ConfigError("object size must be at least 4 pixels")


@dataclass(frozen=True)
class SceneSpec:
    """Complete description of a synthetic recording."""

    camera: CameraSpec = field(default_factory=CameraSpec)
    arm: ArmSpec = field(default_factory=ArmSpec)
    obj: ObjectSpec = field(default_factory=ObjectSpec)
    ellipse: EllipseSpec = field(default_factory=lambda: EllipseSpec(
        center=(0.15, 0.05, 0.0), semi_axes=(0.03, 0.02), normal=(0.0, 0.0, 1.0), n_points=10))
    background_seed: int = 1
    noise_sigma: float = 2.0
    seed: int = 7
    exposure: float = 1.0
    paired_exposure: float = 1.0  # gain of the object-free paired recording
    paired_shadow: float = 0.15  # depth of a soft shadow over the paired recording
    paired_shadow_center: tuple = (0.25, 0.2)  # (row, col) as fractions of the frame
    paired_shadow_sigma: float = 0.12  # meters
    spin_gain: float = 0.05
    min_foreshortening: float = 0.3
    poses: int = 60

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must not be negative")
        if self.exposure <= 0 or self.paired_exposure <= 0:
            raise ConfigError("exposure gains must be positive")
        if not 0 <= self.paired_shadow < 1:
            raise ConfigError("paired_shadow must lie in [0, 1)")
        if self.paired_shadow_sigma <= 0:
            raise ConfigError("paired_shadow_sigma must be positive")
        if not 0 < self.min_foreshortening <= 1:
            raise ConfigError("min_foreshortening must lie in (0, 1]")
        if self.poses < 1:
            raise ConfigError("a scene needs at least one pose")

    @property
    def shape(self) -> tuple:
        return self.camera.height, self.camera.width

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        known = {"camera", "arm", "obj", "ellipse", "background_seed", "noise_sigma", "seed",
                 "exposure", "paired_exposure", "paired_shadow", "paired_shadow_center",
                 "paired_shadow_sigma", "spin_gain", "min_foreshortening", "poses"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scene keys: {', '.join(sorted(unknown))}")
        try:
            parts = {
                "camera": CameraSpec(**_tuples(data.get("camera", {}))),
                "arm": ArmSpec(**_tuples(data.get("arm", {}))),
                "obj": ObjectSpec(**_tuples(data.get("obj", {}))),
                "ellipse": EllipseSpec(**_tuples(data["ellipse"])) if "ellipse" in data else cls().ellipse,
            }
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid scene: {e}") from e
        scalars = _tuples({k: v for k, v in data.items() if k not in parts})
        return cls(**parts, **scalars)

    def with_object(self, obj: ObjectSpec) -> "SceneSpec":
        return replace(self, obj=obj)

    def paired_gain(self) -> np.ndarray:
        """Per-pixel intensity gain of the object-free paired recording.

        The paired session is recorded at another time: a global gain of
        paired_exposure and a soft Gaussian shadow of depth paired_shadow
        that lies still over the tabletop for the whole session.

        Returns:
            (H, W) float64 gain field
        """
        h, w = self.shape
        rows, cols = np.indices((h, w), dtype=np.float64)
        center_row = self.paired_shadow_center[0] * (h - 1)
        center_col = self.paired_shadow_center[1] * (w - 1)
        sigma = self.paired_shadow_sigma * self.camera.pixels_per_meter
        shadow = np.exp(-((rows - center_row) ** 2 + (cols - center_col) ** 2) / (2.0 * sigma ** 2))
        return self.paired_exposure * (1.0 - self.paired_shadow * shadow)


def _tuples(value):
    """Recursively turn JSON lists into tuples."""
    if isinstance(value, dict):
        return {k: _tuples(v) for k, v in value.items()}
    if isinstance(value, list):
        return tuple(_tuples(v) for v in value)
    return value


def default_scene(**overrides) -> SceneSpec:
    """Desk-scale scene with sizes and seed from config."""
    camera = CameraSpec(width=config.SIM_WIDTH, height=config.SIM_HEIGHT)
    ellipse = EllipseSpec(center=(0.15, 0.05, 0.0), semi_axes=(0.03, 0.02), normal=(0.0, 0.0, 1.0),
                          n_points=config.SIM_ELLIPSE_POINTS)
    values = {"camera": camera, "ellipse": ellipse, "seed": config.SIM_SEED, "poses": config.SIM_POSES}
    values.update(overrides)
    return SceneSpec(**values)


def load_scene(path) -> SceneSpec:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"scene file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read scene {path}: {e}") from e
    return SceneSpec.from_dict(data)


def save_scene(scene: SceneSpec, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(scene.to_dict(), indent=2))


# Procedural content

def _ellipse_mask(h: int, w: int) -> np.ndarray:
    bits = np.zeros((h, w), dtype=bool)
    rr, cc = draw.ellipse((h - 1) / 2.0, (w - 1) / 2.0, h / 2.0, w / 2.0, shape=(h, w))
    bits[rr, cc] = True
    return bits


def _box_mask(h: int, w: int) -> np.ndarray:
    bits = np.zeros((h, w), dtype=bool)
    bits[h // 10:h - h // 10, w // 10:w - w // 10] = True
    return bits


def _diamond_mask(h: int, w: int) -> np.ndarray:
    bits = np.zeros((h, w), dtype=bool)
    rr, cc = draw.polygon([0, (h - 1) / 2.0, h - 1, (h - 1) / 2.0], [(w - 1) / 2.0, w - 1, (w - 1) / 2.0, 0],
                          shape=(h, w))
    bits[rr, cc] = True
    return bits


def _capsule_mask(h: int, w: int) -> np.ndarray:
    r = min(h, w) / 2.0
    rows, cols = np.indices((h, w), dtype=np.float64)
    if w >= h:
        c = np.clip(cols, r, w - r)
        return (rows - (h - 1) / 2.0) ** 2 + (cols - c) ** 2 <= r * r
    rw = np.clip(rows, r, h - r)
    return (rows - rw) ** 2 + (cols - (w - 1) / 2.0) ** 2 <= r * r


SHAPES = {
    "ellipse": _ellipse_mask,
    "box": _box_mask,
    "diamond": _diamond_mask,
    "capsule": _capsule_mask,
}


def object_sprite(spec: ObjectSpec) -> tuple:
    """Render an object sprite.

    Returns:
        (pixels H x W x 3 uint8, mask H x W bool)
    """
    h, w = spec.size
    mask = SHAPES[spec.shape](h, w)
    rows, cols = np.indices((h, w))
    stripes = ((rows + cols) // max(spec.stripe, 1)) % 2 == 0
    pixels = np.where(stripes[..., None], np.asarray(spec.colors[0]), np.asarray(spec.colors[1]))
    pixels = np.where(mask[..., None], pixels, 0).astype(np.uint8)
    return pixels, mask


def procedural_background(height: int, width: int, seed: int) -> Frame:
    """Warm, strongly textured tabletop with a soft illumination gradient."""
    rng = np.random.default_rng([seed, 101])
    grain = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (height, width)), sigma=1.0, mode="reflect")
    grain /= grain.std() + 1e-12
    blotches = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (height, width)), sigma=6.0, mode="reflect")
    blotches /= blotches.std() + 1e-12
    rows = np.linspace(-1.0, 1.0, height)[:, None]
    light = 12.0 * rows + 18.0 * np.clip(grain, -2.0, 2.0) + 8.0 * np.clip(blotches, -2.0, 2.0)
    base = np.array([196.0, 172.0, 134.0])
    tint = np.array([1.0, 0.92, 0.78])
    pixels = base[None, None, :] + light[..., None] * tint[None, None, :]
    return Frame(np.clip(pixels, 0, 255))


# Distinct saturated palettes, far from the arm blue, the gripper gray and the tabletop
_OBJECT_PALETTE = [
    ((210, 40, 40), (150, 20, 30)),
    ((240, 140, 20), (190, 95, 10)),
    ((235, 220, 40), (170, 160, 20)),
    ((40, 170, 60), (20, 110, 40)),
    ((150, 50, 170), (100, 30, 120)),
    ((230, 70, 160), (170, 40, 110)),
    ((20, 160, 150), (10, 110, 100)),
    ((120, 200, 40), (80, 140, 20)),
    ((250, 250, 250), (200, 30, 30)),
    ((120, 60, 30), (240, 140, 20)),
]

_OCCLUDER_PALETTE = [
    ((255, 120, 120), (200, 90, 90)),
    ((160, 230, 160), (110, 180, 110)),
    ((255, 200, 120), (220, 160, 80)),
    ((200, 160, 230), (160, 110, 200)),
    ((90, 200, 200), (60, 150, 150)),
    ((240, 240, 170), (200, 200, 110)),
]


def object_catalog(count: int = 10) -> list[ObjectSpec]:
    """Distinct procedural objects for the benchmark."""
    shapes = list(SHAPES)
    objects = []
    for i in range(count):
        colors = _OBJECT_PALETTE[i % len(_OBJECT_PALETTE)]
        h = 56 + 4 * (i % 4)
        w = 64 + 4 * ((i * 3) % 5)
        objects.append(ObjectSpec(shape=shapes[i % len(shapes)], size=(h, w), colors=colors,
                                  stripe=5 + i % 4, name=f"object_{i:02d}"))
    return objects


def occluder_catalog(count: int = 6) -> list[tuple]:
    """Occluder cut-outs (Frame, BinaryMask) for training-sample composition."""
    shapes = list(SHAPES)
    occluders = []
    for i in range(count):
        spec = ObjectSpec(shape=shapes[(i + 1) % len(shapes)], size=(30 + 4 * (i % 3), 36 + 3 * (i % 4)),
                          colors=_OCCLUDER_PALETTE[i % len(_OCCLUDER_PALETTE)], stripe=4 + i % 3,
                          name=f"occluder_{i:02d}")
        pixels, mask = object_sprite(spec)
        occluders.append((Frame(pixels), BinaryMask(mask)))
    return occluders


def background_catalog(height: int, width: int, count: int = 4, seed: int = 1000) -> list[Frame]:
    """Procedural backgrounds distinct from the recording's own tabletop."""
    frames = []
    for i in range(count):
        frame = procedural_background(height, width, seed + i)
        frames.append(Frame(np.roll(frame.pixels, shift=i % 3, axis=2)))
    return frames
