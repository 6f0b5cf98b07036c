"""Handcrafted rPPG pulse estimators (G, CHROM, POS) and a landmark respiration signal."""
from __future__ import annotations

import enum

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import _kernels
from .chunkio import VideoChunk, Waveform
from .errors import InvariantViolation, NoLandmarks
from .metrics import EstimationResult
from .trace import RgbTrace, extract_trace

DEFAULT_WINDOW_S = 1.6


class EstimatorId(str, enum.Enum):
    G = "G"
    CHROM = "CHROM"
    POS = "POS"

    def __str__(self):
        return self.value


def standardize(x) -> np.ndarray:
    """Zero mean, unit (population) variance; constant input maps to zeros."""
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean()
    sd = centered.std()
    if sd == 0.0 or not np.isfinite(sd):
        return np.zeros_like(centered)
    out = centered / sd
    return out - out.mean()


def window_length(window_s: float, fs: float) -> int:
    return int(round(window_s * fs))


def _check_length(trace: RgbTrace, L: int):
    if L < 2:
        raise InvariantViolation("window_length", f"window of {L} frames is too short")
    if len(trace) < L:
        raise InvariantViolation("trace_covers_window", f"trace has {len(trace)} frames, window needs {L}")


def estimate_g(trace: RgbTrace) -> Waveform:
    """Negated, standardized green channel (peaks line up with blood volume)."""
    return Waveform(-standardize(trace.g), trace.fs)


def estimate_chrom(trace: RgbTrace, window_s: float = DEFAULT_WINDOW_S) -> Waveform:
    L = window_length(window_s, trace.fs)
    _check_length(trace, L)
    return Waveform(standardize(_kernels.chrom_overlap_add(trace.as_array(), L)), trace.fs)


def estimate_pos(trace: RgbTrace, window_s: float = DEFAULT_WINDOW_S) -> Waveform:
    L = window_length(window_s, trace.fs)
    _check_length(trace, L)
    return Waveform(standardize(_kernels.pos_overlap_add(trace.as_array(), L)), trace.fs)


def estimate_resp_from_landmarks(chunk: VideoChunk) -> Waveform:
    """Vertical head motion with slow drift removed by a 2 s centred moving average."""
    if chunk.landmarks is None:
        raise NoLandmarks("respiration estimate needs facial landmarks")
    y = chunk.landmarks[:, :, 1].mean(axis=1)
    width = max(1, int(round(2.0 * chunk.fps)))
    detrended = y - uniform_filter1d(y, size=width, mode="nearest")
    return Waveform(standardize(detrended), chunk.fps)


_PULSE = {
    EstimatorId.G: lambda trace, window_s: estimate_g(trace),
    EstimatorId.CHROM: estimate_chrom,
    EstimatorId.POS: estimate_pos,
}


def estimate_pulse(method, trace: RgbTrace, window_s: float = DEFAULT_WINDOW_S) -> Waveform:
    return _PULSE[EstimatorId(method)](trace, window_s)


def run_estimator(method, chunk: VideoChunk, trace: RgbTrace | None = None, with_resp: bool = True) -> EstimationResult:
    """Pulse from ``method`` plus, when landmarks exist, the landmark respiration signal."""
    if trace is None:
        trace = extract_trace(chunk)
    pulse = estimate_pulse(method, trace)
    resp = estimate_resp_from_landmarks(chunk) if with_resp and chunk.landmarks is not None else None
    return EstimationResult(pulse_wave=pulse, resp_wave=resp)
