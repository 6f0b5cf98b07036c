"""Per-chunk evaluation metrics (AE, SNR, Pearson r) and dataset means."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chunkio import VideoChunk, Waveform
from .errors import ConstantInput, EmptyList, FlatSignal, InvariantViolation
from .rates import HR_BAND, RR_BAND, FrequencyBand, bandpass, power_spectrum, rate_from_waveform

SNR_CAP_DB = 60.0
PULSE_HARMONICS = 2
RESP_HARMONICS = 1

RESULTS_HEADER = ["method", "hr_mae", "pulse_snr", "pulse_r", "rr_mae", "resp_snr", "resp_r", "inference_ms"]


@dataclass(frozen=True)
class EstimationResult:
    pulse_wave: Waveform
    resp_wave: Optional[Waveform] = None


@dataclass(frozen=True)
class ChunkMetrics:
    hr_ae: float
    pulse_snr: float
    pulse_r: float
    rr_ae: Optional[float] = None
    resp_snr: Optional[float] = None
    resp_r: Optional[float] = None
    hr_est: Optional[float] = None
    rr_est: Optional[float] = None

    def __post_init__(self):
        for name in ("hr_ae", "pulse_snr", "pulse_r", "rr_ae", "resp_snr", "resp_r"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise InvariantViolation("metrics_finite", f"{name}={v}")
        for name in ("pulse_r", "resp_r"):
            v = getattr(self, name)
            if v is not None and not -1.0 <= v <= 1.0:
                raise InvariantViolation("correlation_range", f"{name}={v}")


@dataclass(frozen=True)
class DatasetReport:
    method: str
    hr_mae: float
    pulse_snr: float
    pulse_r: float
    rr_mae: Optional[float]
    resp_snr: Optional[float]
    resp_r: Optional[float]
    n_chunks: int
    inference_ms: Optional[float] = None

    def as_row(self) -> list[str]:
        vals = [self.hr_mae, self.pulse_snr, self.pulse_r, self.rr_mae, self.resp_snr, self.resp_r, self.inference_ms]
        return [self.method] + ["" if v is None else repr(float(v)) for v in vals]


def absolute_error(est_bpm: float, true_bpm: float) -> float:
    return abs(float(est_bpm) - float(true_bpm))


def snr_db(
    est: Waveform,
    true_rate_bpm: float,
    band: FrequencyBand,
    harmonics: int = PULSE_HARMONICS,
    half_width_hz: float = 0.1,
) -> float:
    """In-band power near the true rate and its harmonics over the rest, in dB.

    Results are capped to +/-60 dB when one side of the ratio is empty.
    """
    f0 = true_rate_bpm / 60.0
    if not band.contains(f0):
        raise InvariantViolation("true_rate_in_band", f"{true_rate_bpm} bpm outside [{band.lo}, {band.hi}] Hz")
    freqs, mag = power_spectrum(est)
    power = mag**2
    in_band = (freqs >= band.lo) & (freqs <= band.hi)
    near = np.zeros_like(in_band)
    for k in range(1, harmonics + 1):
        near |= np.abs(freqs - k * f0) <= half_width_hz
    signal = float(power[in_band & near].sum())
    noise = float(power[in_band & ~near].sum())
    if signal == 0.0 and noise == 0.0:
        raise FlatSignal("no in-band power in the estimated waveform")
    if noise == 0.0:
        return SNR_CAP_DB
    if signal == 0.0:
        return -SNR_CAP_DB
    return float(np.clip(10.0 * math.log10(signal / noise), -SNR_CAP_DB, SNR_CAP_DB))


def pearson_r(est: Waveform, truth: Waveform) -> float:
    x = np.asarray(est.samples, dtype=np.float64)
    y = np.asarray(truth.samples, dtype=np.float64)
    if x.size != y.size:
        raise InvariantViolation("equal_length", f"{x.size} vs {y.size} samples")
    x = x - x.mean()
    y = y - y.mean()
    sx = math.sqrt(float(x @ x))
    sy = math.sqrt(float(y @ y))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInput("Pearson r is undefined for a constant waveform")
    return float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))


def _wave_metrics(est: Waveform, truth: Waveform, true_bpm: float, band: FrequencyBand, harmonics: int):
    rate = rate_from_waveform(est, band)
    ae = absolute_error(rate, true_bpm)
    snr = snr_db(est, true_bpm, band, harmonics=harmonics)
    r = pearson_r(bandpass(est, band), bandpass(truth, band))
    return rate, ae, snr, r


def evaluate_chunk(
    chunk: VideoChunk,
    result: EstimationResult,
    hr_band: FrequencyBand = HR_BAND,
    rr_band: FrequencyBand = RR_BAND,
) -> ChunkMetrics:
    labels = chunk.labels
    for w in (result.pulse_wave, result.resp_wave):
        if w is not None and (len(w) != chunk.frame_count or w.fs != chunk.fps):
            raise InvariantViolation("shared_time_base", "estimated waveform does not match the chunk time base")
    hr_est, hr_ae, pulse_snr, pulse_r = _wave_metrics(
        result.pulse_wave, labels.pulse_wave, labels.hr_bpm, hr_band, PULSE_HARMONICS
    )
    resp = dict(rr_est=None, rr_ae=None, resp_snr=None, resp_r=None)
    if result.resp_wave is not None:
        rr_est, rr_ae, resp_snr, resp_r = _wave_metrics(
            result.resp_wave, labels.resp_wave, labels.rr_bpm, rr_band, RESP_HARMONICS
        )
        resp = dict(rr_est=rr_est, rr_ae=rr_ae, resp_snr=resp_snr, resp_r=resp_r)
    return ChunkMetrics(hr_ae=hr_ae, pulse_snr=pulse_snr, pulse_r=pulse_r, hr_est=hr_est, **resp)


def _mean_present(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def aggregate(metrics: Sequence[ChunkMetrics], method: str, inference_ms: Optional[float] = None) -> DatasetReport:
    if not metrics:
        raise EmptyList("cannot aggregate an empty list of chunk metrics")
    col = lambda name: [getattr(m, name) for m in metrics]  # noqa: E731
    return DatasetReport(
        method=str(method),
        hr_mae=_mean_present(col("hr_ae")),
        pulse_snr=_mean_present(col("pulse_snr")),
        pulse_r=_mean_present(col("pulse_r")),
        rr_mae=_mean_present(col("rr_ae")),
        resp_snr=_mean_present(col("resp_snr")),
        resp_r=_mean_present(col("resp_r")),
        n_chunks=len(metrics),
        inference_ms=inference_ms,
    )


def reports_to_csv(reports: Sequence[DatasetReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for rep in reports:
        writer.writerow(rep.as_row())
    return buf.getvalue()


def write_results_csv(reports: Sequence[DatasetReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(reports_to_csv(reports))
