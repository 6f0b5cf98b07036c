"""Heart and respiratory rate from waveforms via FFT peak picking."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .chunkio import Waveform
from .errors import BandAboveNyquist, EmptyBand, FlatSignal, InvariantViolation

# Spectra are zero-padded until bins are at most this far apart.
MAX_BIN_HZ = 0.5 / 60.0
MIN_RECOMMENDED_S = 5.0


@dataclass(frozen=True)
class FrequencyBand:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or not math.isfinite(self.hi):
            raise InvariantViolation("band_order", f"need 0 < lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def from_bpm(cls, lo_bpm: float, hi_bpm: float) -> "FrequencyBand":
        return cls(lo_bpm / 60.0, hi_bpm / 60.0)

    def contains(self, f_hz: float) -> bool:
        return self.lo <= f_hz <= self.hi


HR_BAND = FrequencyBand(0.667, 4.0)
RR_BAND = FrequencyBand(0.067, 0.75)


def bandpass(w: Waveform, band: FrequencyBand) -> Waveform:
    """Zero every rFFT bin outside ``[band.lo, band.hi]`` and invert."""
    if band.hi >= w.fs / 2:
        raise BandAboveNyquist(f"band upper edge {band.hi} Hz is not below Nyquist ({w.fs / 2} Hz)")
    n = len(w)
    spec = np.fft.rfft(w.samples)
    freqs = np.fft.rfftfreq(n, 1.0 / w.fs)
    spec[(freqs < band.lo) | (freqs > band.hi)] = 0.0
    return Waveform(np.fft.irfft(spec, n), w.fs)


def padded_length(n: int, fs: float) -> int:
    need = max(n, math.ceil(fs / MAX_BIN_HZ))
    return 1 << (need - 1).bit_length()


def power_spectrum(w: Waveform):
    """Magnitude spectrum of the mean-removed, Hann-windowed, zero-padded signal.

    Returns ``(freqs, magnitude)``.
    """
    x = w.samples - w.samples.mean()
    x = x * np.hanning(x.size)
    nfft = padded_length(x.size, w.fs)
    mag = np.abs(np.fft.rfft(x, nfft))
    return np.fft.rfftfreq(nfft, 1.0 / w.fs), mag


def _parabolic_offset(a: float, b: float, c: float) -> float:
    denom = a - 2.0 * b + c
    if denom == 0.0:
        return 0.0
    return 0.5 * (a - c) / denom


def peak_frequency(freqs, mag, band: FrequencyBand) -> float:
    idx = np.flatnonzero((freqs >= band.lo) & (freqs <= band.hi))
    if idx.size == 0:
        raise EmptyBand(f"no spectral bins inside [{band.lo}, {band.hi}] Hz")
    in_band = mag[idx]
    if in_band.max() <= 1e-12 * max(mag.max(), np.finfo(float).tiny) or in_band.max() == 0.0:
        raise FlatSignal("spectrum is zero inside the band")
    k = int(idx[np.argmax(in_band)])  # argmax keeps the lowest bin on ties
    df = freqs[1] - freqs[0]
    if 0 < k < mag.size - 1:
        delta = _parabolic_offset(mag[k - 1], mag[k], mag[k + 1])
    else:
        delta = 0.0
    return (k + delta) * df


def rate_from_waveform(w: Waveform, band: FrequencyBand) -> float:
    """Dominant in-band rate in beats (or breaths) per minute."""
    if w.duration < MIN_RECOMMENDED_S:
        warnings.warn(f"waveform is only {w.duration:.2f} s long; rate resolution degrades", stacklevel=2)
    if not np.any(w.samples - w.samples[0]):
        raise FlatSignal("waveform is constant")
    freqs, mag = power_spectrum(w)
    return 60.0 * peak_frequency(freqs, mag, band)
