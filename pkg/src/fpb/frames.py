"""In-memory frame sequences (the video ``v_0 .. v_T``)."""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import EmptySequence, ShapeMismatch


class LazyFrames(Sequence):
    """Frames produced on demand by ``render(index)``; nothing is cached."""

    def __init__(self, count: int, render: Callable[[int], np.ndarray]):
        self._count = count
        self._render = render

    def __len__(self) -> int:
        return self._count

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self._count))]
        if i < 0:
            i += self._count
        if not 0 <= i < self._count:
            raise IndexError(i)
        return self._render(i)


class FrameSequence(Sequence):
    """Ordered RGB uint8 frames of uniform size.

    ``frames`` may be a list, an ``(n, h, w, 3)`` array, or any sequence
    (e.g. :class:`LazyFrames`) whose items are ``(h, w, 3)`` arrays.
    """

    def __init__(self, frames, width: int | None = None, height: int | None = None):
        if len(frames) == 0:
            raise EmptySequence("a frame sequence needs at least one frame")
        self._frames = frames
        if width is None or height is None:
            first = np.asarray(frames[0])
            height, width = first.shape[:2]
        self.width = int(width)
        self.height = int(height)

    @property
    def count(self) -> int:
        return len(self._frames)

    def __len__(self) -> int:
        return len(self._frames)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        frame = np.asarray(self._frames[i])
        if frame.shape != (self.height, self.width, 3):
            raise ShapeMismatch(
                f"frame {i} has shape {frame.shape}, expected {(self.height, self.width, 3)}"
            )
        return frame

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(len(self)):
            yield self[i]

    def materialize(self) -> "FrameSequence":
        return FrameSequence(np.stack(list(self)), self.width, self.height)

    def retimed(self, index_map: Sequence[int]) -> "FrameSequence":
        """New sequence whose frame ``k`` is this sequence's frame ``index_map[k]``."""
        idx = list(index_map)
        return FrameSequence(LazyFrames(len(idx), lambda k: self[idx[k]]), self.width, self.height)
