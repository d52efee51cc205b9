import struct

import numpy as np
import pytest

from tinytts.audio import AudioClip, read_wav, read_wav_info, write_wav
from tinytts.errors import MalformedWav, UnsupportedFormat

from conftest import tone


def test_sine_scaling_identity(tmp_path):
    # 1 kHz sine at integer amplitude 16384 -> peak ~ 0.5 after /32768 scaling
    clip = tone(1000.0, 16384.0 / 32768.0, 1.0)
    path = tmp_path / "sine.wav"
    write_wav(clip, path)
    back = read_wav(path)
    assert back.sample_rate_hz == 22050
    assert len(back.samples) == 22050
    assert np.max(np.abs(back.samples)) == pytest.approx(0.5, abs=1e-4)


def test_all_zero_file(tmp_path):
    path = tmp_path / "zeros.wav"
    write_wav(AudioClip(np.zeros(100), 8000), path)
    back = read_wav(path)
    assert np.count_nonzero(back.samples) == 0
    assert len(back.samples) == 100
    assert back.duration_s == pytest.approx(100 / 8000)


def test_round_trip_quantization_bound(tmp_path):
    rng = np.random.default_rng(1)
    clip = AudioClip(rng.uniform(-0.9, 0.9, 1000), 16000)
    path = tmp_path / "rt.wav"
    write_wav(clip, path)
    back = read_wav(path)
    assert np.max(np.abs(back.samples - clip.samples)) <= 2.0**-15


def test_clamp_policy(tmp_path):
    path = tmp_path / "clamp.wav"
    write_wav(AudioClip(np.array([1.2, -1.5, 0.0]), 8000), path)
    back = read_wav(path)
    assert back.samples[0] == pytest.approx(32767 / 32768)
    assert back.samples[1] == pytest.approx(-1.0)


def test_empty_clip_round_trips(tmp_path):
    path = tmp_path / "empty.wav"
    write_wav(AudioClip(np.zeros(0), 8000), path)
    back = read_wav(path)
    assert len(back.samples) == 0


def test_truncated_data_chunk(tmp_path):
    path = tmp_path / "good.wav"
    write_wav(AudioClip(np.zeros(500), 8000), path)
    raw = path.read_bytes()
    bad = tmp_path / "trunc.wav"
    bad.write_bytes(raw[: 44 + 100])  # data chunk declares 1000 bytes
    with pytest.raises(MalformedWav):
        read_wav(bad)


def test_bad_magic(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"JUNK" + b"\x00" * 60)
    with pytest.raises(MalformedWav):
        read_wav(bad)


def test_stereo_rejected(tmp_path):
    data = np.zeros(40, dtype="<i2").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 2, 8000, 32000, 4, 16)
    header += b"data" + struct.pack("<I", len(data))
    path = tmp_path / "stereo.wav"
    path.write_bytes(header + data)
    with pytest.raises(UnsupportedFormat):
        read_wav(path)


def test_wav_info_matches_full_read(tmp_path):
    clip = tone(440.0, 0.3, 0.5, fs=16000)
    path = tmp_path / "probe.wav"
    write_wav(clip, path)
    n, rate = read_wav_info(path)
    assert (n, rate) == (len(clip.samples), 16000)


def test_round_trip_property_random_lengths(tmp_path):
    rng = np.random.default_rng(7)
    for i in range(20):
        n = int(rng.integers(1, 5000))
        clip = AudioClip(rng.uniform(-1.0, 1.0, n), 22050)
        path = tmp_path / f"p{i}.wav"
        write_wav(clip, path)
        back = read_wav(path)
        assert np.max(np.abs(back.samples - clip.samples)) <= 2.0**-15
