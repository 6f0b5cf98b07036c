import warnings

import numpy as np
import pytest

from rppgbench import _kernels
from rppgbench.chunkio import ChunkMetadata, VideoChunk, VitalsLabel, Waveform

BACKENDS = _kernels.available_backends()


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return _kernels.get_backend(request.param)


def make_chunk(frames, fps=30.0, hr=72.0, rr=15.0, landmarks=None, boxes=None, metadata=None):
    frames = np.asarray(frames, dtype=np.uint8)
    T = frames.shape[0]
    t = np.arange(T) / fps
    labels = VitalsLabel(
        Waveform(np.sin(2 * np.pi * hr / 60 * t), fps),
        Waveform(np.sin(2 * np.pi * rr / 60 * t), fps),
        hr,
        rr,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return VideoChunk(frames, fps, labels, metadata or ChunkMetadata(), landmarks, boxes)


def random_chunk(rng, T=None, H=None, W=None, with_landmarks=True, with_boxes=True):
    T = T or int(rng.integers(2, 12))
    H = H or int(rng.integers(2, 10))
    W = W or int(rng.integers(2, 10))
    frames = rng.integers(0, 256, size=(T, H, W, 3), dtype=np.uint8)
    lm = rng.normal(size=(T, int(rng.integers(1, 6)), 2)) * 10 if with_landmarks else None
    boxes = None
    if with_boxes:
        x0 = rng.integers(0, W, size=T)
        y0 = rng.integers(0, H, size=T)
        x1 = x0 + 1 + rng.integers(0, W - x0)
        y1 = y0 + 1 + rng.integers(0, H - y0)
        boxes = np.stack([x0, y0, x1, y1], axis=1)
    fps = float(rng.choice([15.0, 25.0, 29.97, 30.0]))
    md = ChunkMetadata(
        age=int(rng.integers(0, 90)),
        gender_male=bool(rng.integers(2)),
        skin_type=int(rng.integers(1, 7)),
        movement=float(rng.random()),
        illuminance_var=float(rng.random()),
        camera_stationary=bool(rng.integers(2)),
    )
    T = frames.shape[0]
    labels = VitalsLabel(
        Waveform(rng.normal(size=T), fps), Waveform(rng.normal(size=T), fps),
        float(rng.uniform(35, 240)), float(rng.uniform(4, 45)),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return VideoChunk(frames, fps, labels, md, lm, boxes)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report_criterion(request):
    """Record one acceptance line: ``report_criterion(n, ok, detail)``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        lines.append((number, line))
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
