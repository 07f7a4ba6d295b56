"""
Reader and writer for the Middlebury .flo format.

Layout (little-endian): 4-byte magic "PIEH", int32 width, int32 height,
then width * height interleaved (u, v) float32 pairs in row-major order.
"""
from pathlib import Path

import numpy as np

from errors import FlowFormatError
from optical_flow.field import FlowField

MAGIC = b"PIEH"
HEADER_SIZE = 12


def write_flo(flow: FlowField, path) -> None:
    """Write a flow field as a .flo file."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    header = MAGIC + np.array([flow.width, flow.height], dtype="<i4").tobytes()
    payload = np.ascontiguousarray(flow.vectors, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def parse_flo(data: bytes) -> FlowField:
    """Decode the bytes of a .flo file.

    Raises:
        FlowFormatError: on bad magic, bad dimensions or a truncated payload
    """
    if len(data) < 4 or data[:4] != MAGIC:
        raise FlowFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    if len(data) < HEADER_SIZE:
        raise FlowFormatError("truncated header", len(data))

    width, height = (int(x) for x in np.frombuffer(data, dtype="<i4", count=2, offset=4))
    if width <= 0 or height <= 0:
        raise FlowFormatError(f"invalid dimensions {width}x{height}", 4)

    expected = width * height * 2 * 4
    available = len(data) - HEADER_SIZE
    if available < expected:
        raise FlowFormatError(
            f"truncated payload: {available} of {expected} bytes present", HEADER_SIZE
        )
    if available > expected:
        raise FlowFormatError("trailing bytes after payload", HEADER_SIZE + expected)

    values = np.frombuffer(data, dtype="<f4", count=width * height * 2, offset=HEADER_SIZE)
    vectors = values.reshape(height, width, 2)
    if not np.all(np.isfinite(vectors)):
        raise FlowFormatError("non-finite flow values", HEADER_SIZE)
    return FlowField(vectors)


def read_flo(path) -> FlowField:
    """Read a .flo file into a FlowField."""
    return parse_flo(Path(path).read_bytes())
