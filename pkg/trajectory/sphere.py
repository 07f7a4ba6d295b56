"""
View directions on the unit sphere from a Fibonacci lattice.
"""
import math
from typing import Sequence

import numpy as np

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

_PARALLEL_TOL = 1e-6
_FALLBACK_UP = ((0.0, 1.0, 0.0), (1.0, 0.0, 0.0))


def fibonacci_lattice(n: int) -> np.ndarray:
    """N lattice points (x_i, y_i) = ((i + 1/2) / N, i / phi mod 1) in [0, 1)^2.

    Returns:
        (N, 2) array
    """
    if n < 1:
        raise ValueError("a Fibonacci lattice needs at least one point")
    i = np.arange(n, dtype=np.float64)
    return np.stack([(i + 0.5) / n, np.mod(i / GOLDEN_RATIO, 1.0)], axis=1)


def lattice_to_sphere(points: np.ndarray) -> np.ndarray:
    """Area-preserving map of lattice points onto the unit sphere.

    theta = acos(2x - 1) - pi/2 is the latitude, 2 pi y the azimuth.

    Returns:
        (N, 3) array of unit vectors
    """
    points = np.asarray(points, dtype=np.float64)
    theta = np.arccos(np.clip(2.0 * points[:, 0] - 1.0, -1.0, 1.0)) - math.pi / 2.0
    azimuth = 2.0 * math.pi * points[:, 1]
    sphere = np.stack([
        np.cos(theta) * np.cos(azimuth),
        np.cos(theta) * np.sin(azimuth),
        np.sin(theta),
    ], axis=1)
    return sphere / np.linalg.norm(sphere, axis=1, keepdims=True)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError(f"cannot normalize {v}")
    return v / norm


def pose_rotation(p: Sequence[float], up_hint: Sequence[float] = (0.0, 0.0, 1.0)) -> np.ndarray:
    """Rotation whose columns are [right, up, forward] with forward = p.

    When p is (anti)parallel to up_hint the hint is replaced by (0, 1, 0),
    then (1, 0, 0).

    Returns:
        3 x 3 orthonormal matrix with determinant +1
    """
    forward = _unit(p)
    for hint in (up_hint, *_FALLBACK_UP):
        cross = np.cross(_unit(hint), forward)
        if np.linalg.norm(cross) > _PARALLEL_TOL:
            break
    right = cross / np.linalg.norm(cross)
    up = np.cross(forward, right)
    return np.column_stack([right, up, forward])


def mirror_to_camera_hemisphere(points: np.ndarray, camera_dir: Sequence[float]) -> np.ndarray:
    """Reflect directions pointing away from the camera through the plane normal to it."""
    c = np.asarray(camera_dir, dtype=np.float64)
    if not np.isclose(np.linalg.norm(c), 1.0, atol=1e-9):
        raise ValueError("camera_dir must be a unit vector")
    points = np.array(points, dtype=np.float64, copy=True)
    dots = points @ c
    away = dots < 0
    points[away] -= 2.0 * dots[away, None] * c
    return points
