"""Chunk data model and the on-disk chunk directory format.

A chunk directory holds::

    meta.json        fps, geometry, demographics, behavioural factors, summary vitals
    frames.rgb24     raw interleaved RGB, frame-major then row-major
    labels.csv       frame,ppg,resp  (one row per video frame)
    landmarks.csv    frame,point,x,y (optional)
    boxes.csv        frame,x0,y0,x1,y1 (optional; full frame when absent)

Floats are written with ``repr`` so a save/load round trip is exact.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorruptHeader, InvariantViolation, IoFailure, MissingFile

HR_LABEL_RANGE = (35.0, 240.0)
RR_LABEL_RANGE = (4.0, 45.0)
DURATION_RANGE = (5.0, 20.0)

META_KEYS = (
    "fps", "width", "height", "frame_count",
    "age", "gender_male", "skin_type", "movement", "illuminance_var", "camera_stationary",
    "hr_bpm", "rr_bpm",
)


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True, order="C")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Waveform:
    """A uniformly sampled scalar signal."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = _frozen(self.samples, np.float64)
        if samples.ndim != 1:
            raise InvariantViolation("waveform_1d", f"expected 1-D samples, got shape {samples.shape}")
        if samples.size < 2:
            raise InvariantViolation("waveform_min_samples", f"need at least 2 samples, got {samples.size}")
        if not np.isfinite(samples).all():
            raise InvariantViolation("waveform_finite", "samples contain NaN or inf")
        fs = float(self.fs)
        if not (fs > 0 and math.isfinite(fs)):
            raise InvariantViolation("waveform_fs_positive", f"fs={self.fs!r}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", fs)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.fs == other.fs and np.array_equal(self.samples, other.samples)

    __hash__ = None


@dataclass(frozen=True)
class ChunkMetadata:
    age: int = 0
    gender_male: bool = False
    skin_type: int = 1
    movement: float = 0.0
    illuminance_var: float = 0.0
    camera_stationary: bool = True

    def __post_init__(self):
        if isinstance(self.age, bool) or int(self.age) != self.age or self.age < 0:
            raise InvariantViolation("age_nonnegative_int", f"age={self.age!r}")
        if self.skin_type not in (1, 2, 3, 4, 5, 6) or isinstance(self.skin_type, bool):
            raise InvariantViolation("skin_type_fitzpatrick", f"skin_type={self.skin_type!r}")
        for name in ("movement", "illuminance_var"):
            v = float(getattr(self, name))
            if math.isnan(v):
                raise InvariantViolation(f"{name}_finite", f"{name} is NaN")
            object.__setattr__(self, name, min(max(v, 0.0), 1.0))
        object.__setattr__(self, "age", int(self.age))
        object.__setattr__(self, "gender_male", bool(self.gender_male))
        object.__setattr__(self, "camera_stationary", bool(self.camera_stationary))


@dataclass(frozen=True)
class VitalsLabel:
    pulse_wave: Waveform
    resp_wave: Waveform
    hr_bpm: float
    rr_bpm: float

    def __post_init__(self):
        lo, hi = HR_LABEL_RANGE
        if not (lo <= self.hr_bpm <= hi):
            raise InvariantViolation("hr_bpm_range", f"hr_bpm={self.hr_bpm} outside [{lo}, {hi}]")
        lo, hi = RR_LABEL_RANGE
        if not (lo <= self.rr_bpm <= hi):
            raise InvariantViolation("rr_bpm_range", f"rr_bpm={self.rr_bpm} outside [{lo}, {hi}]")
        object.__setattr__(self, "hr_bpm", float(self.hr_bpm))
        object.__setattr__(self, "rr_bpm", float(self.rr_bpm))


@dataclass(frozen=True, eq=False)
class VideoChunk:
    """Frames, landmarks, face boxes, labels and metadata for one segment.

    ``frames`` is ``(T, H, W, 3)`` uint8. ``landmarks`` is ``(T, K, 2)`` (x, y)
    or None. ``face_boxes`` is ``(T, 4)`` integer ``(x0, y0, x1, y1)``,
    half-open; None means the full frame.
    """

    frames: np.ndarray
    fps: float
    labels: VitalsLabel
    metadata: ChunkMetadata = field(default_factory=ChunkMetadata)
    landmarks: np.ndarray | None = None
    face_boxes: np.ndarray | None = None

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.dtype != np.uint8:
            raise InvariantViolation("frames_uint8", f"frames dtype {frames.dtype}")
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise InvariantViolation("frames_shape", f"expected (T, H, W, 3), got {frames.shape}")
        T, H, W, _ = frames.shape
        if T < 2:
            raise InvariantViolation("min_frames", f"chunk needs at least 2 frames, got {T}")
        if H < 1 or W < 1:
            raise InvariantViolation("frame_size", f"{H}x{W}")
        fps = float(self.fps)
        if not (fps > 0 and math.isfinite(fps)):
            raise InvariantViolation("fps_positive", f"fps={self.fps!r}")
        object.__setattr__(self, "frames", _frozen(frames, np.uint8))
        object.__setattr__(self, "fps", fps)

        boxes = self.face_boxes
        if boxes is None:
            boxes = np.tile(np.array([0, 0, W, H], dtype=np.int64), (T, 1))
        boxes = np.asarray(boxes)
        if boxes.shape != (T, 4):
            raise InvariantViolation("face_box_per_frame", f"expected ({T}, 4), got {boxes.shape}")
        if not np.issubdtype(boxes.dtype, np.integer):
            if not np.array_equal(boxes, np.round(boxes)):
                raise InvariantViolation("face_box_integer", "face boxes must be integer pixel coordinates")
        boxes = boxes.astype(np.int64)
        x0, y0, x1, y1 = boxes.T
        if (x0 < 0).any() or (y0 < 0).any() or (x1 > W).any() or (y1 > H).any():
            raise InvariantViolation("face_box_in_bounds", "a face box extends outside the image")
        if (x1 <= x0).any() or (y1 <= y0).any():
            raise InvariantViolation("face_box_positive_area", "a face box has zero area")
        object.__setattr__(self, "face_boxes", _frozen(boxes, np.int64))

        if self.landmarks is not None:
            lm = np.asarray(self.landmarks, dtype=np.float64)
            if lm.ndim != 3 or lm.shape[0] != T or lm.shape[2] != 2 or lm.shape[1] < 1:
                raise InvariantViolation("landmarks_per_frame", f"expected ({T}, K, 2), got {lm.shape}")
            if not np.isfinite(lm).all():
                raise InvariantViolation("landmarks_finite", "landmark coordinates contain NaN or inf")
            object.__setattr__(self, "landmarks", _frozen(lm, np.float64))

        for name in ("pulse_wave", "resp_wave"):
            w = getattr(self.labels, name)
            if len(w) != T:
                raise InvariantViolation("labels_cover_chunk", f"{name} has {len(w)} samples for {T} frames")
            if w.fs != fps:
                raise InvariantViolation("labels_share_time_base", f"{name} fs={w.fs} but chunk fps={fps}")

        lo, hi = DURATION_RANGE
        if not (lo <= self.duration <= hi):
            warnings.warn(f"chunk duration {self.duration:.2f} s outside [{lo}, {hi}] s", stacklevel=3)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def duration(self) -> float:
        return self.frame_count / self.fps

    def __eq__(self, other):
        if not isinstance(other, VideoChunk):
            return NotImplemented
        if (self.landmarks is None) != (other.landmarks is None):
            return False
        return (
            self.fps == other.fps
            and np.array_equal(self.frames, other.frames)
            and np.array_equal(self.face_boxes, other.face_boxes)
            and (self.landmarks is None or np.array_equal(self.landmarks, other.landmarks))
            and self.labels == other.labels
            and self.metadata == other.metadata
        )

    __hash__ = None


def _full_frame_boxes(chunk: VideoChunk) -> bool:
    full = np.array([0, 0, chunk.width, chunk.height])
    return bool((chunk.face_boxes == full).all())


def _fmt(v) -> str:
    return repr(float(v))


def save_chunk(chunk: VideoChunk, path) -> None:
    if not isinstance(chunk, VideoChunk):
        raise TypeError("save_chunk expects a VideoChunk")
    path = Path(path)
    md = chunk.metadata
    meta = {
        "fps": chunk.fps,
        "width": chunk.width,
        "height": chunk.height,
        "frame_count": chunk.frame_count,
        "age": md.age,
        "gender_male": md.gender_male,
        "skin_type": md.skin_type,
        "movement": md.movement,
        "illuminance_var": md.illuminance_var,
        "camera_stationary": md.camera_stationary,
        "hr_bpm": chunk.labels.hr_bpm,
        "rr_bpm": chunk.labels.rr_bpm,
    }
    try:
        path.mkdir(parents=True, exist_ok=True)
        (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        (path / "frames.rgb24").write_bytes(np.ascontiguousarray(chunk.frames).tobytes())

        ppg = chunk.labels.pulse_wave.samples
        resp = chunk.labels.resp_wave.samples
        lines = ["frame,ppg,resp"]
        lines += [f"{t},{_fmt(ppg[t])},{_fmt(resp[t])}" for t in range(chunk.frame_count)]
        (path / "labels.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

        lm_path = path / "landmarks.csv"
        if chunk.landmarks is not None:
            lines = ["frame,point,x,y"]
            for t, pts in enumerate(chunk.landmarks):
                lines += [f"{t},{k},{_fmt(x)},{_fmt(y)}" for k, (x, y) in enumerate(pts)]
            lm_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        elif lm_path.exists():
            lm_path.unlink()

        box_path = path / "boxes.csv"
        if not _full_frame_boxes(chunk):
            lines = ["frame,x0,y0,x1,y1"]
            lines += [f"{t},{x0},{y0},{x1},{y1}" for t, (x0, y0, x1, y1) in enumerate(chunk.face_boxes)]
            box_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        elif box_path.exists():
            box_path.unlink()
    except OSError as exc:
        raise IoFailure(f"cannot write chunk to {path}: {exc}") from exc


def _read_table(file: Path, header: str, ncols: int) -> np.ndarray:
    with file.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != header:
            raise CorruptHeader(f"{file.name}: expected header {header!r}, got {first!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise CorruptHeader(f"{file.name}: unparsable row ({exc})") from exc
    if data.size == 0:
        data = data.reshape(0, ncols)
    if data.shape[1] != ncols:
        raise CorruptHeader(f"{file.name}: expected {ncols} columns, got {data.shape[1]}")
    return data


def _require(file: Path) -> Path:
    if not file.is_file():
        raise MissingFile(f"missing {file.name} in {file.parent}")
    return file


def load_chunk(path) -> VideoChunk:
    """Load and fully validate a chunk directory."""
    path = Path(path)
    try:
        meta = json.loads(_require(path / "meta.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptHeader(f"meta.json is not valid JSON: {exc}") from exc
    if not isinstance(meta, dict):
        raise CorruptHeader("meta.json must hold a JSON object")
    missing = [k for k in META_KEYS if k not in meta]
    if missing:
        raise CorruptHeader(f"meta.json lacks keys: {', '.join(missing)}")
    for k in ("width", "height", "frame_count"):
        if not isinstance(meta[k], int) or isinstance(meta[k], bool) or meta[k] < 0:
            raise CorruptHeader(f"meta.json: {k} must be a non-negative integer")
    T, H, W = meta["frame_count"], meta["height"], meta["width"]

    raw = _require(path / "frames.rgb24").read_bytes()
    expected = T * H * W * 3
    if len(raw) != expected:
        raise CorruptHeader(f"frames.rgb24 holds {len(raw)} bytes, expected {expected} (= {T}x{H}x{W}x3)")
    frames = np.frombuffer(raw, dtype=np.uint8).reshape(T, H, W, 3)

    labels = _read_table(_require(path / "labels.csv"), "frame,ppg,resp", 3)
    if labels.shape[0] != T or not np.array_equal(labels[:, 0], np.arange(T)):
        raise InvariantViolation("labels_cover_chunk", f"labels.csv must list frames 0..{T - 1} in order")

    landmarks = None
    lm_file = path / "landmarks.csv"
    if lm_file.exists():
        lm = _read_table(lm_file, "frame,point,x,y", 4)
        if T == 0 or lm.shape[0] % T:
            raise InvariantViolation("landmarks_per_frame", "landmark rows are not a multiple of frame_count")
        K = lm.shape[0] // T
        expected_idx = np.stack(np.meshgrid(np.arange(T), np.arange(K), indexing="ij"), -1).reshape(-1, 2)
        if not np.array_equal(lm[:, :2], expected_idx):
            raise InvariantViolation("landmarks_per_frame", "every frame must list the same K points in order")
        landmarks = lm[:, 2:].reshape(T, K, 2)

    boxes = None
    box_file = path / "boxes.csv"
    if box_file.exists():
        bx = _read_table(box_file, "frame,x0,y0,x1,y1", 5)
        if bx.shape[0] != T or not np.array_equal(bx[:, 0], np.arange(T)):
            raise InvariantViolation("face_box_per_frame", "boxes.csv must list one box per frame in order")
        boxes = bx[:, 1:]

    fps = meta["fps"]
    try:
        metadata = ChunkMetadata(
            age=meta["age"],
            gender_male=meta["gender_male"],
            skin_type=meta["skin_type"],
            movement=meta["movement"],
            illuminance_var=meta["illuminance_var"],
            camera_stationary=meta["camera_stationary"],
        )
        vitals = VitalsLabel(
            pulse_wave=Waveform(labels[:, 1], fps),
            resp_wave=Waveform(labels[:, 2], fps),
            hr_bpm=meta["hr_bpm"],
            rr_bpm=meta["rr_bpm"],
        )
    except TypeError as exc:
        raise CorruptHeader(f"meta.json has a field of the wrong type: {exc}") from exc
    return VideoChunk(
        frames=frames, fps=fps, labels=vitals, metadata=metadata, landmarks=landmarks, face_boxes=boxes
    )
