"""Minimal RIFF/WAVE reader and writer for mono 16-bit PCM.

A hand-rolled parser instead of the stdlib wave module so that malformed
containers and unsupported encodings raise distinct, testable errors.
Out-of-range samples are clamped on write, never wrapped.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import MalformedWav, UnsupportedFormat
from .clip import AudioClip

_FMT_PCM = 1


def _parse_chunks(raw: bytes) -> tuple[bytes, bytes]:
    """Return (fmt_chunk, data_chunk) payloads from RIFF bytes."""
    if len(raw) < 12:
        raise MalformedWav("file shorter than a RIFF header")
    if raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise MalformedWav("missing RIFF/WAVE magic")
    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4 : pos + 8])
        body = raw[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedWav(
                f"chunk {cid!r} declares {size} bytes but only {len(body)} present"
            )
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None:
        raise MalformedWav("no fmt chunk")
    if data is None:
        raise MalformedWav("no data chunk")
    return fmt, data


def read_wav(path: str | Path) -> AudioClip:
    """Read a mono 16-bit PCM WAV file; samples scaled by 1/32768 into [-1, 1)."""
    raw = Path(path).read_bytes()
    fmt, data = _parse_chunks(raw)
    if len(fmt) < 16:
        raise MalformedWav(f"fmt chunk too short ({len(fmt)} bytes)")
    audio_format, channels, rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
    if audio_format != _FMT_PCM:
        raise UnsupportedFormat(f"compressed or non-PCM format tag {audio_format}")
    if channels != 1:
        raise UnsupportedFormat(f"{channels} channels; only mono is supported")
    if bits != 16:
        raise UnsupportedFormat(f"{bits}-bit samples; only 16-bit is supported")
    if rate <= 0:
        raise MalformedWav("non-positive sample rate")
    if len(data) % 2 != 0:
        raise MalformedWav("data chunk has an odd byte count")
    ints = np.frombuffer(data, dtype="<i2")
    return AudioClip(ints.astype(np.float64) / 32768.0, rate)


def read_wav_info(path: str | Path) -> tuple[int, int]:
    """Header-only probe: (sample count, sample rate) without decoding audio."""
    raw = Path(path).read_bytes()
    fmt, data = _parse_chunks(raw)
    if len(fmt) < 16:
        raise MalformedWav(f"fmt chunk too short ({len(fmt)} bytes)")
    audio_format, channels, rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
    if audio_format != _FMT_PCM or channels != 1 or bits != 16:
        raise UnsupportedFormat("only mono 16-bit PCM is supported")
    if rate <= 0:
        raise MalformedWav("non-positive sample rate")
    return len(data) // 2, rate


def write_wav(clip: AudioClip, path: str | Path) -> None:
    """Write mono 16-bit PCM; values outside [-1, 1] clamp to full scale."""
    q = np.round(clip.samples * 32768.0)
    q = np.clip(q, -32768, 32767).astype("<i2")
    data = q.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH",
        16,
        _FMT_PCM,
        1,
        clip.sample_rate_hz,
        clip.sample_rate_hz * 2,
        2,
        16,
    )
    header += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(header + data)
