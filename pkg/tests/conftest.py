"""Shared fixture builders: deterministic tones, gated noise, speech-like clips."""

import numpy as np
import pytest

from tinytts.audio import AudioClip

FS = 22050


def tone(freq_hz: float, amplitude: float, duration_s: float, fs: int = FS) -> AudioClip:
    t = np.arange(int(round(duration_s * fs))) / fs
    return AudioClip(amplitude * np.sin(2 * np.pi * freq_hz * t), fs)


def gated_noise(
    burst_s: float, gap_s: float, n_periods: int, seed: int = 0, fs: int = FS, std: float = 1.0
) -> AudioClip:
    """Unit-variance Gaussian bursts separated by silence, 50% duty by default."""
    rng = np.random.default_rng(seed)
    burst_n = int(round(burst_s * fs))
    gap_n = int(round(gap_s * fs))
    parts = []
    for _ in range(n_periods):
        parts.append(std * rng.standard_normal(burst_n))
        parts.append(np.zeros(gap_n))
    return AudioClip(np.concatenate(parts), fs)


def speech_like(seed: int, duration_s: float = 3.0, fs: int = FS) -> AudioClip:
    """Speech surrogate: syllabically gated, low-pass-ish harmonic + noise mix.

    Alternates voiced stretches (harmonic stack with pitch wobble) and pauses,
    so P.56 sees realistic activity between 0.4 and 0.9.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    f0 = 110.0 + 40.0 * rng.random()
    voiced = np.zeros(n)
    for k in range(1, 6):
        voiced += (0.5 / k) * np.sin(
            2 * np.pi * k * f0 * t + 2 * np.pi * rng.random()
        )
    hiss = 0.05 * rng.standard_normal(n)
    # syllable-rate on/off envelope, smoothed to avoid clicks
    seg = max(1, int(0.15 * fs))
    gates = rng.random(int(np.ceil(n / seg))) < 0.7
    env = np.repeat(gates.astype(float), seg)[:n]
    win = np.ones(int(0.01 * fs))
    env = np.convolve(env, win / len(win), mode="same")
    x = (voiced + hiss) * env
    peak = np.max(np.abs(x))
    return AudioClip(0.5 * x / peak, fs)


@pytest.fixture
def sine_clip() -> AudioClip:
    return tone(1000.0, 0.5, 2.0)
