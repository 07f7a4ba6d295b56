"""
Exception hierarchy shared by every pipeline stage.
The CLI maps ConfigError to exit code 2 and DataError to exit code 3.
"""


class SegmentationError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SegmentationError):
    """Invalid configuration or usage."""


class DataError(SegmentationError):
    """Invalid, missing or degenerate input data."""


class DimensionMismatchError(DataError, ValueError):
    """Two rasters that must share dimensions do not."""

    def __init__(self, what: str, expected: tuple, actual: tuple):
        super().__init__(f"{what}: expected shape {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class DegenerateHistogramError(DataError, ValueError):
    """A histogram has no mass to threshold."""


class FlowFormatError(DataError):
    """A .flo file could not be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class SequenceTooShortError(DataError, ValueError):
    """A frame sequence is shorter than an operation requires."""


class EmptyMaskError(DataError, ValueError):
    """A mask that must contain pixels is empty."""


class CompositionError(DataError):
    """A training sample could not be composed."""


class RenderError(DataError):
    """The simulator cannot render a requested pose."""

    def __init__(self, message: str, pose_index: int):
        super().__init__(f"pose {pose_index}: {message}")
        self.pose_index = pose_index
