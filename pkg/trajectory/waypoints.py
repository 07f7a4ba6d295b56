"""
End-effector waypoints: an ellipse loop for translation combined with the
spiral of sphere view directions for rotation, in two passes (the second
with the gripper turned by 180 degrees about its forward axis).
"""
import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from config import config
from errors import DataError
from trajectory.sphere import fibonacci_lattice, lattice_to_sphere, mirror_to_camera_hemisphere, pose_rotation

logger = logging.getLogger(__name__)

# 180 degrees about the forward (third) axis
FLIP = np.diag([-1.0, -1.0, 1.0])

_ARC_SAMPLES = 4096


@dataclass(frozen=True)
class EllipseSpec:
    """Translation loop of the end effector."""

    center: tuple = (0.0, 0.0, 0.0)
    semi_axes: tuple = (0.1, 0.05)  # meters
    normal: tuple = (0.0, 0.0, 1.0)
    n_points: int = 20

    def __post_init__(self):
        a, b = self.semi_axes
        if a <= 0 or b <= 0:
            raise ValueError("ellipse semi-axes must be positive")
        if not np.isclose(np.linalg.norm(self.normal), 1.0, atol=1e-9):
            raise ValueError("ellipse normal must be a unit vector")
        if self.n_points < 1:
            raise ValueError("an ellipse needs at least one point")

    def basis(self) -> tuple:
        """In-plane unit axes (e1, e2) for the semi-axes a and b."""
        n = np.asarray(self.normal, dtype=np.float64)
        for seed in ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)):
            e1 = np.asarray(seed) - np.dot(seed, n) * n
            if np.linalg.norm(e1) > 1e-6:
                break
        e1 /= np.linalg.norm(e1)
        return e1, np.cross(n, e1)


def _arc_length_angles(a: float, b: float, n: int) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, _ARC_SAMPLES + 1)
    speed = np.hypot(a * np.sin(t), b * np.cos(t))
    s = cumulative_trapezoid(speed, t, initial=0.0)
    targets = np.arange(n) * (s[-1] / n)
    return np.interp(targets, s, t)


def ellipse_points(ellipse: EllipseSpec, arc_length: bool = False) -> np.ndarray:
    """n_points positions on the ellipse, equal in parameter angle or in arc length.

    Returns:
        (n_points, 3) array in meters
    """
    a, b = ellipse.semi_axes
    n = ellipse.n_points
    if arc_length:
        angles = _arc_length_angles(a, b, n)
    else:
        angles = 2.0 * np.pi * np.arange(n) / n
    e1, e2 = ellipse.basis()
    center = np.asarray(ellipse.center, dtype=np.float64)
    return center + np.outer(a * np.cos(angles), e1) + np.outer(b * np.sin(angles), e2)


@dataclass(frozen=True, eq=False)
class TrajectoryPose:
    """One waypoint of the recording trajectory."""

    index: int
    translation: tuple
    rotation: np.ndarray
    pass_index: int = 1

    def __post_init__(self):
        r = np.array(self.rotation, dtype=np.float64, copy=True)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3 x 3")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9) or not np.isclose(np.linalg.det(r), 1.0, atol=1e-9):
            raise ValueError(f"rotation of pose {self.index} is not a proper rotation")
        r.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", tuple(float(x) for x in self.translation))

    @property
    def forward(self) -> np.ndarray:
        return self.rotation[:, 2]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "pass": self.pass_index,
            "translation": list(self.translation),
            "rotation": self.rotation.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectoryPose":
        return cls(
            index=int(data["index"]),
            translation=tuple(data["translation"]),
            rotation=np.asarray(data["rotation"], dtype=np.float64).reshape(3, 3),
            pass_index=int(data.get("pass", 1)),
        )


def build_trajectory(sphere_points: np.ndarray, ellipse: EllipseSpec, up_hint=(0.0, 0.0, 1.0),
                     arc_length: bool = False, second_pass: bool = True) -> list[TrajectoryPose]:
    """Pair each sphere point (in lattice order) with the next ellipse point.

    Args:
        sphere_points: (N, 3) view directions, usually mirrored to the camera side
        ellipse: Translation loop
        up_hint: Up direction for the rotation construction
        arc_length: Space ellipse points by arc length instead of parameter angle
        second_pass: Also emit the 180-degree regrasp pass

    Returns:
        N poses per pass; pass-2 poses are flagged with pass_index 2
    """
    sphere_points = np.asarray(sphere_points, dtype=np.float64)
    if sphere_points.size == 0:
        raise ValueError("build_trajectory needs at least one sphere point")
    loop = ellipse_points(ellipse, arc_length=arc_length)

    poses = []
    rotations = [pose_rotation(p, up_hint) for p in sphere_points]
    passes = (1, 2) if second_pass else (1,)
    for pass_index in passes:
        for i, rotation in enumerate(rotations):
            if pass_index == 2:
                rotation = rotation @ FLIP
            poses.append(TrajectoryPose(
                index=i,
                translation=tuple(loop[i % len(loop)]),
                rotation=rotation,
                pass_index=pass_index,
            ))
    return poses


# Convenience functions

def default_trajectory(n: Optional[int] = None, n_ellipse: Optional[int] = None,
                       camera_dir=(0.0, 0.0, 1.0), ellipse: Optional[EllipseSpec] = None,
                       second_pass: bool = True) -> list[TrajectoryPose]:
    """Lattice, mirroring and ellipse combined with the configured defaults."""
    n = n or config.TRAJECTORY_POINTS
    n_ellipse = n_ellipse or config.ELLIPSE_POINTS
    camera = np.asarray(camera_dir, dtype=np.float64)
    norm = np.linalg.norm(camera)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("camera direction must be a nonzero vector")
    camera = camera / norm
    points = mirror_to_camera_hemisphere(lattice_to_sphere(fibonacci_lattice(n)), camera)
    if ellipse is None:
        ellipse = EllipseSpec(normal=tuple(camera), n_points=n_ellipse)
    poses = build_trajectory(points, ellipse, second_pass=second_pass)
    logger.info(f"Built trajectory with {len(poses)} poses")
    return poses


def write_trajectory_json(poses: Sequence[TrajectoryPose], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps([p.to_dict() for p in poses], indent=2))


def load_trajectory_json(path) -> list[TrajectoryPose]:
    try:
        data = json.loads(Path(path).read_text())
        return [TrajectoryPose.from_dict(entry) for entry in data]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise DataError(f"cannot read trajectory {path}: {e}") from e


def write_trajectory_csv(poses: Sequence[TrajectoryPose], path) -> None:
    """One row per pose: index, pass, x, y, z, r00 .. r22."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    header = ["index", "pass", "x", "y", "z"] + [f"r{i}{j}" for i in range(3) for j in range(3)]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for p in poses:
            writer.writerow([p.index, p.pass_index, *p.translation, *p.rotation.ravel().tolist()])
