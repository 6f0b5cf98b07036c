import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rppgbench.chunkio import ChunkMetadata, VideoChunk, VitalsLabel, Waveform, load_chunk, save_chunk
from rppgbench.errors import CorruptHeader, InvariantViolation, MissingFile
from rppgbench.synth import SynthSpec, generate

from conftest import make_chunk, random_chunk


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_load_well_formed_chunk(tmp_path):
    chunk = generate(SynthSpec(duration_s=10, fps=30, height=64, width=64))
    save_chunk(chunk, tmp_path / "c")
    loaded = load_chunk(tmp_path / "c")
    assert loaded.frame_count == 300
    assert loaded.frames.shape == (300, 64, 64, 3)
    assert loaded == chunk


def test_on_disk_layout(tmp_path):
    chunk = make_chunk(np.zeros((3, 2, 4, 3)))
    save_chunk(chunk, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["frames.rgb24", "labels.csv", "meta.json"]
    assert (tmp_path / "frames.rgb24").stat().st_size == 3 * 2 * 4 * 3
    meta = json.loads((tmp_path / "meta.json").read_text(encoding="utf-8"))
    assert (meta["frame_count"], meta["height"], meta["width"]) == (3, 2, 4)
    assert (tmp_path / "labels.csv").read_text().splitlines()[0] == "frame,ppg,resp"


def test_frames_are_frame_major_interleaved(tmp_path):
    frames = np.arange(2 * 2 * 3 * 3, dtype=np.uint8).reshape(2, 2, 3, 3)
    save_chunk(make_chunk(frames), tmp_path)
    assert (tmp_path / "frames.rgb24").read_bytes() == bytes(range(36))


def test_truncated_frames_is_corrupt(tmp_path):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    raw = (tmp_path / "frames.rgb24").read_bytes()
    (tmp_path / "frames.rgb24").write_bytes(raw[:-1])
    with pytest.raises(CorruptHeader):
        load_chunk(tmp_path)


@pytest.mark.parametrize("name", ["meta.json", "frames.rgb24", "labels.csv"])
def test_missing_file(tmp_path, name):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    (tmp_path / name).unlink()
    with pytest.raises(MissingFile):
        load_chunk(tmp_path)


def test_bad_labels_header(tmp_path):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    text = (tmp_path / "labels.csv").read_text().replace("frame,ppg,resp", "t,ppg,resp")
    (tmp_path / "labels.csv").write_text(text)
    with pytest.raises(CorruptHeader):
        load_chunk(tmp_path)


def test_meta_missing_key(tmp_path):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    meta = json.loads((tmp_path / "meta.json").read_text())
    del meta["hr_bpm"]
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(CorruptHeader):
        load_chunk(tmp_path)


def test_labels_row_missing(tmp_path):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    lines = (tmp_path / "labels.csv").read_text().splitlines()
    (tmp_path / "labels.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(InvariantViolation):
        load_chunk(tmp_path)


def test_landmarks_ragged(tmp_path):
    lm = np.zeros((4, 2, 2))
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3)), landmarks=lm), tmp_path)
    lines = (tmp_path / "landmarks.csv").read_text().splitlines()
    (tmp_path / "landmarks.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(InvariantViolation):
        load_chunk(tmp_path)


@pytest.mark.parametrize("field,value", [("skin_type", 7), ("hr_bpm", 300.0), ("rr_bpm", 1.0), ("fps", 0)])
def test_meta_invariants_checked_on_load(tmp_path, field, value):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    meta = json.loads((tmp_path / "meta.json").read_text())
    meta[field] = value
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(InvariantViolation):
        load_chunk(tmp_path)


def test_out_of_bounds_box_checked_on_load(tmp_path):
    boxes = np.tile([0, 0, 2, 2], (4, 1))
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3)), boxes=boxes), tmp_path)
    text = (tmp_path / "boxes.csv").read_text().replace("3,0,0,2,2", "3,0,0,4,2")
    (tmp_path / "boxes.csv").write_text(text)
    with pytest.raises(InvariantViolation):
        load_chunk(tmp_path)


def test_empty_and_single_frame_rejected():
    with pytest.raises(InvariantViolation):
        make_chunk(np.zeros((0, 3, 3, 3)))
    with pytest.raises(InvariantViolation):
        make_chunk(np.zeros((1, 3, 3, 3)))


def test_construction_invariants():
    frames = np.zeros((4, 3, 3, 3), dtype=np.uint8)
    w = Waveform(np.zeros(4), 30)
    lab = VitalsLabel(w, w, 70, 15)
    with pytest.raises(InvariantViolation):
        VideoChunk(frames.astype(np.float32), 30, lab)
    with pytest.raises(InvariantViolation):
        VideoChunk(frames, 30, lab, face_boxes=np.tile([1, 1, 1, 3], (4, 1)))
    with pytest.raises(InvariantViolation):
        VideoChunk(frames, 30, lab, landmarks=np.zeros((3, 2, 2)))
    with pytest.raises(InvariantViolation):
        VideoChunk(frames, 25, lab)
    with pytest.raises(InvariantViolation):
        VideoChunk(frames[:3], 30, lab)
    with pytest.raises(InvariantViolation):
        Waveform([1.0], 30)
    with pytest.raises(InvariantViolation):
        Waveform([1.0, np.nan], 30)
    with pytest.raises(InvariantViolation):
        ChunkMetadata(skin_type=0)


def test_metadata_clamped():
    md = ChunkMetadata(movement=1.7, illuminance_var=-0.2)
    assert (md.movement, md.illuminance_var) == (1.0, 0.0)


def test_duration_warning():
    frames = np.zeros((30, 2, 2, 3), dtype=np.uint8)
    w = Waveform(np.zeros(30), 30)
    with pytest.warns(UserWarning):
        VideoChunk(frames, 30, VitalsLabel(w, w, 70, 15))


@pytest.mark.filterwarnings("ignore:chunk duration")
def test_resave_removes_stale_optional_files(tmp_path):
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3)), landmarks=np.zeros((4, 1, 2))), tmp_path)
    assert (tmp_path / "landmarks.csv").exists()
    save_chunk(make_chunk(np.zeros((4, 3, 3, 3))), tmp_path)
    assert not (tmp_path / "landmarks.csv").exists()
    assert load_chunk(tmp_path).landmarks is None


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lm=st.booleans(), boxes=st.booleans())
def test_round_trip_random_chunks(tmp_path_factory, seed, lm, boxes):
    chunk = random_chunk(np.random.default_rng(seed), with_landmarks=lm, with_boxes=boxes)
    d = tmp_path_factory.mktemp("rt")
    save_chunk(chunk, d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        back = load_chunk(d)
    assert back == chunk
    assert back.frames.tobytes() == chunk.frames.tobytes()
    assert back.metadata == chunk.metadata
    assert back.labels.hr_bpm == chunk.labels.hr_bpm
    # saving the loaded chunk reproduces the same bytes
    d2 = tmp_path_factory.mktemp("rt2")
    save_chunk(back, d2)
    assert _files(d) == _files(d2)
