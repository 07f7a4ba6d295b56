"""
Configuration management for the grasped-object segmentation toolkit.
Loads settings from environment variables.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_float(name: str, default: float) -> float:
    return float(os.getenv(name, str(default)))


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


class Config:
    """Application configuration loaded from environment variables."""

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Optical flow (variational solver standing in for the learned estimator)
    FLOW_ESTIMATOR: str = os.getenv("FLOW_ESTIMATOR", "variational")
    FLOW_SMOOTHNESS: float = _env_float("FLOW_SMOOTHNESS", 15.0)  # alpha on 0-255 intensities
    FLOW_ITERATIONS: int = _env_int("FLOW_ITERATIONS", 100)
    FLOW_LEVELS: int = _env_int("FLOW_LEVELS", 4)
    FLOW_SCALE: float = _env_float("FLOW_SCALE", 0.5)

    # Static-pixel suppression, mean absolute channel difference on 0-255
    STATIC_TOLERANCE: float = _env_float("STATIC_TOLERANCE", 6.0)
    STATIC_MARGIN: float = _env_float("STATIC_MARGIN", 3.0)

    # Morphology
    MORPH_RADIUS: int = _env_int("MORPH_RADIUS", 1)

    # Post-processing, stored at the reference resolution
    GRIPPER_MAX_DIST: float = _env_float("GRIPPER_MAX_DIST", 100.0)
    MIN_MASK_AREA: float = _env_float("MIN_MASK_AREA", 2500.0)
    REFERENCE_HEIGHT: int = _env_int("REFERENCE_HEIGHT", 414)
    REFERENCE_WIDTH: int = _env_int("REFERENCE_WIDTH", 736)

    # Robot arm harvesting and composition
    HARVEST_MIN_FRACTION: float = _env_float("HARVEST_MIN_FRACTION", 0.01)
    HISTOGRAM_BINS: int = _env_int("HISTOGRAM_BINS", 16)  # per RGB channel
    WEIGHT_SIGMA: float = _env_float("WEIGHT_SIGMA", 50.0)  # pixels
    WEIGHT_PEAK: float = _env_float("WEIGHT_PEAK", 3.0)
    TRAIN_SAMPLES: int = _env_int("TRAIN_SAMPLES", 500)
    VAL_SAMPLES: int = _env_int("VAL_SAMPLES", 50)

    # Baselines
    CD_RGB_DIVISOR: float = _env_float("CD_RGB_DIVISOR", 25.0)  # tau = p / divisor

    # Trajectory
    TRAJECTORY_POINTS: int = _env_int("TRAJECTORY_POINTS", 301)
    ELLIPSE_POINTS: int = _env_int("ELLIPSE_POINTS", 20)

    # Simulator (desk scale)
    SIM_WIDTH: int = _env_int("SIM_WIDTH", 320)
    SIM_HEIGHT: int = _env_int("SIM_HEIGHT", 240)
    SIM_POSES: int = _env_int("SIM_POSES", 60)
    SIM_ELLIPSE_POINTS: int = _env_int("SIM_ELLIPSE_POINTS", 10)
    SIM_SEED: int = _env_int("SIM_SEED", 7)

    # Parallel workers for per-object / per-frame work
    WORKERS: int = _env_int("WORKERS", os.cpu_count() or 1)

    # Evaluation run ledger (empty disables recording)
    RESULTS_DATABASE_URL: str = os.getenv("RESULTS_DATABASE_URL", "")

    @classmethod
    def validate(cls) -> list:
        """Validate that all configuration values are usable."""
        errors = []
        if cls.FLOW_SMOOTHNESS <= 0:
            errors.append("FLOW_SMOOTHNESS must be positive")
        if cls.FLOW_ITERATIONS < 1:
            errors.append("FLOW_ITERATIONS must be at least 1")
        if cls.FLOW_LEVELS < 1:
            errors.append("FLOW_LEVELS must be at least 1")
        if not 0 < cls.FLOW_SCALE < 1:
            errors.append("FLOW_SCALE must lie in (0, 1)")
        if cls.STATIC_TOLERANCE < 0 or cls.STATIC_MARGIN < 0:
            errors.append("STATIC_TOLERANCE and STATIC_MARGIN must not be negative")
        if cls.MORPH_RADIUS < 1:
            errors.append("MORPH_RADIUS must be at least 1")
        if cls.GRIPPER_MAX_DIST <= 0:
            errors.append("GRIPPER_MAX_DIST must be positive")
        if cls.MIN_MASK_AREA < 0:
            errors.append("MIN_MASK_AREA must not be negative")
        if cls.REFERENCE_HEIGHT <= 0 or cls.REFERENCE_WIDTH <= 0:
            errors.append("REFERENCE_HEIGHT and REFERENCE_WIDTH must be positive")
        if not 0 <= cls.HARVEST_MIN_FRACTION < 1:
            errors.append("HARVEST_MIN_FRACTION must lie in [0, 1)")
        if cls.HISTOGRAM_BINS < 2 or 256 % cls.HISTOGRAM_BINS:
            errors.append("HISTOGRAM_BINS must divide 256")
        if cls.WEIGHT_PEAK < 1:
            errors.append("WEIGHT_PEAK must be at least 1")
        if cls.CD_RGB_DIVISOR <= 0:
            errors.append("CD_RGB_DIVISOR must be positive")
        if cls.TRAJECTORY_POINTS < 1 or cls.ELLIPSE_POINTS < 1:
            errors.append("TRAJECTORY_POINTS and ELLIPSE_POINTS must be positive")
        if cls.WORKERS < 1:
            errors.append("WORKERS must be at least 1")
        return errors


# Singleton instance
config = Config()
