"""
Sliding frame window for sequence processing.
Keeps the previous, current and next frame around a moving center.
"""
from collections import deque
from typing import Iterable, Iterator, Optional

from imaging.raster import Frame


class FrameWindow:
    """Fixed-size window over a stream of frames."""

    def __init__(self, size: int = 3):
        """Initialize the window.

        Args:
            size: Number of frames kept (odd, so the window has a center)
        """
        if size < 1 or size % 2 == 0:
            raise ValueError("window size must be a positive odd number")
        self._size = size
        self._frames: deque = deque(maxlen=size)

    def push(self, frame: Optional[Frame]):
        """Append a frame, dropping the oldest one when the window is full."""
        self._frames.append(frame)

    def is_full(self) -> bool:
        return len(self._frames) == self._size

    def center(self) -> Optional[Frame]:
        """Middle frame of a full window."""
        if not self.is_full():
            return None
        return self._frames[self._size // 2]

    def neighbors(self) -> tuple:
        """(previous, next) frames adjacent to the center of a full window."""
        if not self.is_full():
            return None, None
        mid = self._size // 2
        return self._frames[mid - 1], self._frames[mid + 1]

    def get_frames(self) -> list[Frame]:
        return list(self._frames)

    def clear(self):
        self._frames.clear()

    def __len__(self) -> int:
        return len(self._frames)


def sliding_triples(frames: Iterable[Frame]) -> Iterator[tuple]:
    """Yield (previous, current, next) for every frame of a sequence.

    The first frame has no previous and the last no next neighbor; the
    missing entry is None.

    Args:
        frames: Frames in temporal order

    Returns:
        Iterator of (prev, cur, next) tuples, one per input frame
    """
    window = FrameWindow(3)
    window.push(None)
    for frame in frames:
        window.push(frame)
        if window.is_full() and window.center() is not None:
            prev, nxt = window.neighbors()
            yield prev, window.center(), nxt
    window.push(None)
    if window.is_full() and window.center() is not None:
        prev, nxt = window.neighbors()
        yield prev, window.center(), nxt
