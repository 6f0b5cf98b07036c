"""Per-frame colour traces and the behavioural factors derived from video."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chunkio import VideoChunk, Waveform
from .errors import EmptyRoi, InvariantViolation, NoLandmarks

# BT.601
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
HALF_RANGE_8BIT = 127.5


@dataclass(frozen=True, eq=False)
class RgbTrace:
    """Mean face-box colour per frame, on the 0-255 scale."""

    r: np.ndarray
    g: np.ndarray
    b: np.ndarray
    fs: float

    def __post_init__(self):
        chans = [np.array(getattr(self, c), dtype=np.float64) for c in "rgb"]
        n = chans[0].size
        if any(c.ndim != 1 or c.size != n for c in chans):
            raise InvariantViolation("trace_equal_length", "r, g, b must be 1-D and equally long")
        if n < 2:
            raise InvariantViolation("trace_min_length", f"need at least 2 samples, got {n}")
        for name, c in zip("rgb", chans):
            if not np.isfinite(c).all() or c.min() < 0 or c.max() > 255:
                raise InvariantViolation("trace_value_range", f"channel {name} outside [0, 255]")
            c.flags.writeable = False
            object.__setattr__(self, name, c)
        if not self.fs > 0:
            raise InvariantViolation("trace_fs_positive", f"fs={self.fs!r}")
        object.__setattr__(self, "fs", float(self.fs))

    @classmethod
    def from_array(cls, rgb, fs) -> "RgbTrace":
        rgb = np.asarray(rgb, dtype=np.float64)
        return cls(rgb[:, 0], rgb[:, 1], rgb[:, 2], fs)

    def as_array(self) -> np.ndarray:
        """``(T, 3)`` copy, columns R, G, B."""
        return np.stack([self.r, self.g, self.b], axis=1)

    def __len__(self):
        return self.r.size


def _check_boxes(chunk: VideoChunk):
    b = chunk.face_boxes
    if ((b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1]) <= 0).any():
        raise EmptyRoi("a face box contains no pixels")


def extract_trace(chunk: VideoChunk) -> RgbTrace:
    _check_boxes(chunk)
    means = _kernels.box_means(chunk.frames, chunk.face_boxes)
    return RgbTrace.from_array(means, chunk.fps)


def luma_series(chunk: VideoChunk) -> Waveform:
    # luma is linear in RGB, so the box mean of Y equals Y of the box-mean colour
    _check_boxes(chunk)
    means = _kernels.box_means(chunk.frames, chunk.face_boxes)
    return Waveform(means @ LUMA_WEIGHTS, chunk.fps)


def illuminance_variation(luma: Waveform) -> float:
    """Population SD of per-frame face luma, scaled so 127.5 maps to 1."""
    sd = float(np.std(luma.samples))
    return min(max(sd / HALF_RANGE_8BIT, 0.0), 1.0)


def movement_score(chunk: VideoChunk) -> float:
    """Mean landmark displacement per frame relative to face size, in [0, 1].

    Displacements are expressed per 1/30 s so the score does not depend on
    the frame rate.
    """
    if chunk.landmarks is None:
        raise NoLandmarks("movement_score needs facial landmarks")
    lm = chunk.landmarks
    step = np.linalg.norm(np.diff(lm, axis=0), axis=2).mean(axis=1)  # (T-1,)
    boxes = chunk.face_boxes[1:].astype(np.float64)
    diag = np.hypot(boxes[:, 2] - boxes[:, 0], boxes[:, 3] - boxes[:, 1])
    raw = float(np.mean(step / diag)) * (chunk.fps / 30.0)
    return min(max(raw, 0.0), 1.0)
