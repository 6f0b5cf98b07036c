"""Synthetic face-video chunks with known pulse and respiration."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .chunkio import ChunkMetadata, VideoChunk, VitalsLabel, Waveform
from .errors import SpecInvalid
from .rates import HR_BAND, RR_BAND
from .trace import illuminance_variation, luma_series, movement_score

# relative pulse strength per channel, green strongest
PULSE_CHANNEL_GAIN = np.array([0.33, 0.77, 0.53]) / 0.77
DRIFT_HZ = 0.05
N_LANDMARKS = 5


@dataclass(frozen=True)
class SynthSpec:
    duration_s: float = 10.0
    fps: float = 30.0
    height: int = 64
    width: int = 64
    base_r: float = 200.0
    base_g: float = 140.0
    base_b: float = 110.0
    hr_bpm: float = 72.0
    rr_bpm: float = 15.0
    pulse_amplitude: float = 0.01
    resp_motion_px: float = 1.0
    illum_drift_amplitude: float = 0.0
    pixel_noise_sd: float = 0.0
    skin_texture_sd: float = 0.05
    seed: int = 0
    age: int = 35
    gender_male: bool = False
    skin_type: int = 3
    camera_stationary: bool = True

    def __post_init__(self):
        if not 5.0 <= self.duration_s <= 20.0:
            raise SpecInvalid(f"duration_s={self.duration_s} outside [5, 20]")
        if not self.fps > 0:
            raise SpecInvalid(f"fps={self.fps} must be positive")
        if self.height < 1 or self.width < 1:
            raise SpecInvalid(f"image size {self.height}x{self.width} must be positive")
        for name in ("base_r", "base_g", "base_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 255.0:
                raise SpecInvalid(f"{name}={v} outside [0, 255]")
        if not HR_BAND.contains(self.hr_bpm / 60.0):
            raise SpecInvalid(f"hr_bpm={self.hr_bpm} outside the HR band")
        if not RR_BAND.contains(self.rr_bpm / 60.0):
            raise SpecInvalid(f"rr_bpm={self.rr_bpm} outside the RR band")
        if not 0.0 <= self.pulse_amplitude <= 0.1:
            raise SpecInvalid(f"pulse_amplitude={self.pulse_amplitude} outside [0, 0.1]")
        for name in ("resp_motion_px", "illum_drift_amplitude", "pixel_noise_sd", "skin_texture_sd"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise SpecInvalid(f"{name}={v} must be a finite value >= 0")
        if self.skin_type not in range(1, 7):
            raise SpecInvalid(f"skin_type={self.skin_type} outside 1..6")
        if self.age < 0:
            raise SpecInvalid(f"age={self.age} must be >= 0")
        if round(self.duration_s * self.fps) < 2:
            raise SpecInvalid("spec yields fewer than 2 frames")

    @property
    def frame_count(self) -> int:
        return int(round(self.duration_s * self.fps))

    @property
    def base_color(self) -> np.ndarray:
        return np.array([self.base_r, self.base_g, self.base_b])

    def replace(self, **changes) -> "SynthSpec":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return SynthSpec(**kw)


def _landmark_layout(height: int, width: int) -> np.ndarray:
    """Eyes, nose tip and mouth corners, relative to the image."""
    rel = np.array([[0.35, 0.40], [0.65, 0.40], [0.50, 0.55], [0.40, 0.70], [0.60, 0.70]])
    return rel * np.array([width, height])


def generate(spec: SynthSpec) -> VideoChunk:
    T = spec.frame_count
    t = np.arange(T) / spec.fps
    pulse = np.sin(2 * np.pi * spec.hr_bpm / 60.0 * t)
    resp = np.sin(2 * np.pi * spec.rr_bpm / 60.0 * t)
    drift = spec.illum_drift_amplitude * np.sin(2 * np.pi * DRIFT_HZ * t)

    # per-frame colour (T, 3), then broadcast over the image
    color = spec.base_color * (1.0 + spec.pulse_amplitude * pulse[:, None] * PULSE_CHANNEL_GAIN)
    color *= (1.0 + drift)[:, None]
    shape = (T, spec.height, spec.width, 3)
    rng = np.random.default_rng(spec.seed)
    # static per-pixel skin texture, shared by all frames
    texture = 1.0 + spec.skin_texture_sd * rng.standard_normal((spec.height, spec.width, 1))
    img = color[:, None, None, :] * texture
    if spec.pixel_noise_sd > 0:
        img += rng.normal(0.0, spec.pixel_noise_sd, size=shape)
    frames = np.clip(np.rint(img), 0, 255).astype(np.uint8)

    base_pts = _landmark_layout(spec.height, spec.width)
    landmarks = np.repeat(base_pts[None], T, axis=0)
    landmarks[:, :, 1] += spec.resp_motion_px * resp[:, None]

    labels = VitalsLabel(
        pulse_wave=Waveform(pulse, spec.fps),
        resp_wave=Waveform(resp, spec.fps),
        hr_bpm=spec.hr_bpm,
        rr_bpm=spec.rr_bpm,
    )
    draft = VideoChunk(frames=frames, fps=spec.fps, labels=labels, landmarks=landmarks)
    metadata = ChunkMetadata(
        age=spec.age,
        gender_male=spec.gender_male,
        skin_type=spec.skin_type,
        movement=movement_score(draft),
        illuminance_var=illuminance_variation(luma_series(draft)),
        camera_stationary=spec.camera_stationary,
    )
    return VideoChunk(frames=draft.frames, fps=spec.fps, labels=labels, metadata=metadata, landmarks=draft.landmarks)
