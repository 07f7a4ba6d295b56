"""
Dense flow field and solver parameter types.
"""
from dataclasses import asdict, dataclass

import numpy as np

from config import config


@dataclass(frozen=True, eq=False)
class FlowField:
    """H x W grid of (u, v) displacements in pixels/frame.

    u runs along columns (x), v along rows (y). Stored as float32, the
    native precision of .flo files.
    """

    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors)
        if vectors.ndim != 3 or vectors.shape[2] != 2:
            raise ValueError(f"FlowField needs an H x W x 2 array, got shape {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("FlowField values must be finite")
        vectors = np.array(vectors, dtype=np.float32, copy=True)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        return cls(np.zeros((height, width, 2), dtype=np.float32))

    @classmethod
    def from_components(cls, u: np.ndarray, v: np.ndarray) -> "FlowField":
        return cls(np.stack([u, v], axis=-1))

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @property
    def shape(self) -> tuple:
        return self.vectors.shape[:2]

    @property
    def u(self) -> np.ndarray:
        return self.vectors[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.vectors[..., 1]


@dataclass(frozen=True)
class FlowParams:
    """Configuration of the variational flow solver."""

    smoothness_weight: float = 15.0  # alpha, on 0-255 intensities
    iterations_per_level: int = 100
    pyramid_levels: int = 4
    pyramid_scale: float = 0.5
    estimator: str = "variational"

    def __post_init__(self):
        if self.smoothness_weight <= 0:
            raise ValueError("smoothness_weight must be positive")
        if self.iterations_per_level < 1:
            raise ValueError("iterations_per_level must be at least 1")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be at least 1")
        if not 0 < self.pyramid_scale < 1:
            raise ValueError("pyramid_scale must lie in (0, 1)")

    @classmethod
    def from_config(cls) -> "FlowParams":
        """Build parameters from the environment configuration."""
        return cls(
            smoothness_weight=config.FLOW_SMOOTHNESS,
            iterations_per_level=config.FLOW_ITERATIONS,
            pyramid_levels=config.FLOW_LEVELS,
            pyramid_scale=config.FLOW_SCALE,
            estimator=config.FLOW_ESTIMATOR,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FlowParams":
        return cls(**data)


def flow_magnitude(flow: FlowField) -> np.ndarray:
    """Per-pixel Euclidean norm of the displacement, as float64."""
    return np.hypot(flow.u.astype(np.float64), flow.v.astype(np.float64))
