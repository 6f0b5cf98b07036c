"""Per-frame latency of the streaming pulse pipeline.

One "frame" of work is: face-box mean of the new frame, push into a sliding
buffer, and run the estimator update on that buffer (one POS window, one
CHROM window every hop frames, or a buffer re-standardization for G).
Face detection is not part of the measured work.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .estimators import DEFAULT_WINDOW_S, EstimatorId, window_length

WARMUP_ITERATIONS = 10


class FrameProcessor:
    """Streaming pulse estimator fed one frame at a time."""

    def __init__(self, method, height: int, width: int, fps: float = 30.0,
                 window_s: float = DEFAULT_WINDOW_S, box=None, kernels=None):
        self.method = EstimatorId(method)
        self.k = kernels or _kernels
        self.L = window_length(window_s, fps)
        self.hop = max(1, self.L // 2)
        self.box = tuple(box) if box is not None else (0, 0, width, height)
        self.buf = np.zeros((self.L, 3))
        self.acc = np.zeros(self.L)
        self.n_seen = 0

    def push(self, frame) -> float:
        """Add a frame; return the oldest sample of the overlap-add output."""
        rgb = self.k.box_mean_frame(frame, self.box)
        self.buf[:-1] = self.buf[1:]
        self.buf[-1] = rgb
        self.acc[:-1] = self.acc[1:]
        self.acc[-1] = 0.0
        self.n_seen += 1
        if self.n_seen < self.L:
            return 0.0
        if self.method is EstimatorId.POS:
            self.acc += self.k.pos_overlap_add(self.buf, self.L)
        elif self.method is EstimatorId.CHROM:
            if (self.n_seen - self.L) % self.hop == 0:
                self.acc += self.k.chrom_overlap_add(self.buf, self.L)
        else:
            g = self.buf[:, 1]
            sd = g.std()
            self.acc[-1] = 0.0 if sd == 0 else -(g[-1] - g.mean()) / sd
        return float(self.acc[0])


@dataclass
class TimingResult:
    method: str
    height: int
    width: int
    iterations: int
    backend: str
    samples_ms: list = field(repr=False, default_factory=list)

    @property
    def mean_ms(self) -> float:
        return statistics.fmean(self.samples_ms)

    @property
    def sd_ms(self) -> float:
        return statistics.pstdev(self.samples_ms) if len(self.samples_ms) > 1 else 0.0

    def as_dict(self) -> dict:
        return {
            "method": self.method, "height": self.height, "width": self.width,
            "iterations": self.iterations, "warmup": WARMUP_ITERATIONS, "backend": self.backend,
            "mean_ms": self.mean_ms, "sd_ms": self.sd_ms,
        }


def measure_frame_time(method, height: int = 64, width: int = 64, iterations: int = 1000,
                       seed: int = 0, fps: float = 30.0, backend: str | None = None) -> TimingResult:
    """Mean and SD of per-frame processing time over ``iterations`` frames.

    The processor is primed with a full window and then run for
    ``WARMUP_ITERATIONS`` untimed frames first.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    kernels = _kernels.get_backend(backend) if backend else _kernels
    proc = FrameProcessor(method, height, width, fps=fps, kernels=kernels)
    rng = np.random.default_rng(seed)
    pool = rng.integers(60, 200, size=(32, height, width, 3), dtype=np.uint8)
    for i in range(proc.L + WARMUP_ITERATIONS):
        proc.push(pool[i % len(pool)])
    samples = []
    clock = time.perf_counter_ns
    for i in range(iterations):
        frame = pool[i % len(pool)]
        t0 = clock()
        proc.push(frame)
        samples.append((clock() - t0) / 1e6)
    name = backend or _kernels.BACKEND
    return TimingResult(str(proc.method), height, width, iterations, name, samples)
